#pragma once

#include <cstdint>
#include <vector>

namespace topoloc {

// One LiDAR return in the robot frame (x forward, y left, z up, ground
// near z = 0). ring/azimuth carry the range-view structure; -1 marks an
// unstructured point.
struct Point {
  double x = 0.0, y = 0.0, z = 0.0;
  int32_t ring = -1;
  int32_t azimuth = -1;
};

struct PointCloud {
  std::vector<Point> points;
  // Range-view dimensions; 0 when the cloud carries no ring structure.
  int32_t rings = 0;
  int32_t azimuth_bins = 0;

  bool structured() const { return rings > 0 && azimuth_bins > 0; }
  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace topoloc
