#include "topoloc/range_image.hpp"

#include <algorithm>
#include <cmath>

#include "topoloc/errors.hpp"

namespace topoloc {

RangeImage RangeImage::from_cloud(const PointCloud& cloud) {
  int32_t rows = cloud.rings, cols = cloud.azimuth_bins;
  if (rows <= 0 || cols <= 0) {
    for (const Point& p : cloud.points) {
      rows = std::max(rows, p.ring + 1);
      cols = std::max(cols, p.azimuth + 1);
    }
  }
  if (rows <= 0 || cols <= 0) throw EmptyImage("cloud has no ring structure");

  RangeImage ri;
  ri.rows = rows;
  ri.cols = cols;
  ri.range.assign(static_cast<size_t>(rows) * cols, 0.0f);
  ri.index.assign(static_cast<size_t>(rows) * cols, -1);

  size_t filled = 0;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    if (p.ring < 0 || p.azimuth < 0 || p.ring >= rows || p.azimuth >= cols)
      continue;
    const float r =
        static_cast<float>(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z));
    if (r <= 0.0f) continue;
    const size_t idx = static_cast<size_t>(p.ring) * cols + p.azimuth;
    if (ri.range[idx] == 0.0f || r < ri.range[idx]) {
      if (ri.range[idx] == 0.0f) ++filled;
      ri.range[idx] = r;
      ri.index[idx] = static_cast<int32_t>(i);
    }
  }
  if (filled == 0) throw EmptyImage("no valid returns");
  return ri;
}

}  // namespace topoloc
