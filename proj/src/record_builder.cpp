#include "topoloc/record_builder.hpp"

#include "topoloc/errors.hpp"

namespace topoloc {

ScanRecord build_scan_record(const PointCloud& cloud, const GridConfig& grid_cfg,
                             const CurbParams& curb_cfg,
                             const FeatureConfig& feat_cfg,
                             const RecordOptions& opts, uint64_t seed) {
  std::vector<Point> curbs;
  try {
    curbs = detect_curbs(cloud, curb_cfg, seed);
  } catch (const EmptyImage&) {
  } catch (const DegenerateInput&) {
  }
  ScanRecord rec = project_cloud(cloud, curbs, grid_cfg);
  if (opts.with_distance_maps) build_distance_maps(rec, grid_cfg.d_max);
  if (opts.with_features) {
    rec.features_global = detect_features(
        rec.grid, FeatureKind::OrientedBinary, feat_cfg.max_global);
    rec.features_edge =
        detect_features(rec.grid, FeatureKind::CornerScore, feat_cfg.max_edge);
  }
  return rec;
}

}  // namespace topoloc
