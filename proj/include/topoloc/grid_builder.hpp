#pragma once

#include <vector>

#include <Eigen/Core>

#include "topoloc/distance_map.hpp"
#include "topoloc/features.hpp"
#include "topoloc/grid.hpp"
#include "topoloc/point_cloud.hpp"

namespace topoloc {

struct GridConfig {
  double resolution = 0.2;  // m/cell
  double extent = 80.0;     // grid side, centered on the sensor
  double wall_zmin = 0.3;   // wall height band
  double wall_zmax = 2.5;
  int min_hits = 2;         // returns per cell to call it a wall
  double d_max = 5.0;       // distance map truncation
};

// Everything scan matching needs from one scan: the classified grid, the
// wall/curb cell-center point sets, their distance maps, and the two
// feature sets. Distance maps and points are derived from the grid and are
// rebuilt (not stored) when a map is loaded.
struct ScanRecord {
  OccupancyGrid grid;
  std::vector<Eigen::Vector2d> wall_points;
  std::vector<Eigen::Vector2d> curb_points;
  DistanceMap wall_dmap;
  DistanceMap curb_dmap;
  std::vector<Feature> features_global;  // OrientedBinary
  std::vector<Feature> features_edge;    // CornerScore

  bool has_distance_maps() const {
    return wall_dmap.valid() && curb_dmap.valid();
  }
};

// Projects a leveled cloud (ground near z = 0) into a classified grid.
// Wall cells need >= min_hits returns inside the wall height band; curb
// cells come from the curb detector output; free space is traced along
// sensor rays. Priority on conflicts: curb > wall > free. An empty cloud
// yields an all-unknown grid.
ScanRecord project_cloud(const PointCloud& cloud,
                         const std::vector<Point>& curbs,
                         const GridConfig& cfg);

// Fills wall_dmap / curb_dmap from the grid classes.
void build_distance_maps(ScanRecord& rec, double d_max);

}  // namespace topoloc
