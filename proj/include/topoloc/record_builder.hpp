#pragma once

#include <cstdint>

#include "topoloc/curb_detector.hpp"
#include "topoloc/grid_builder.hpp"

namespace topoloc {

struct FeatureConfig {
  int max_global = 500;
  int max_edge = 300;
};

struct RecordOptions {
  bool with_distance_maps = true;
  bool with_features = true;
};

// Full per-scan pipeline: curb detection, projection, distance maps,
// feature detection. Curb detection failures on degenerate clouds (no
// returns, no fittable ground plane) degrade to an empty curb set.
ScanRecord build_scan_record(const PointCloud& cloud, const GridConfig& grid_cfg,
                             const CurbParams& curb_cfg,
                             const FeatureConfig& feat_cfg,
                             const RecordOptions& opts, uint64_t seed);

}  // namespace topoloc
