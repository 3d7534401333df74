#pragma once

#include <vector>

#include "topoloc/grid.hpp"

namespace topoloc {

// Truncated Euclidean distance field over one cell class, with its spatial
// gradient. Shares the source grid's geometry. d is in meters, clamped to
// [0, d_max]; grad is the central-difference slope (m/m), zeroed on
// truncated plateaus.
struct DistanceMap {
  double resolution = 0.2;
  int32_t width = 0;
  int32_t height = 0;
  Pose2D origin;
  double d_max = 5.0;
  bool no_source = false;  // no cell of the source class existed
  std::vector<float> d;
  std::vector<Eigen::Vector2f> grad;

  bool valid() const { return width > 0 && height > 0; }

  float at(int32_t ix, int32_t iy) const {
    return d[static_cast<size_t>(iy) * width + ix];
  }

  // Bilinear sample of d at a scan-frame point, with the exact gradient of
  // the interpolated surface (w.r.t. scan-frame coordinates). Returns false
  // when p falls outside the interpolable interior; callers treat such
  // points as zero residual / zero Jacobian.
  bool sample(const Eigen::Vector2d& p, double& value,
              Eigen::Vector2d& gradient) const;
};

// Exact Euclidean distance transform, truncated at d_max. Sets no_source
// (d = d_max everywhere, zero gradient) if the grid has no cell of class
// cls. OpenMP-parallel over rows/columns; bit-exact with the serial
// reference below.
DistanceMap distance_transform(const OccupancyGrid& grid, CellClass cls,
                               double d_max);

namespace serial {
DistanceMap distance_transform(const OccupancyGrid& grid, CellClass cls,
                               double d_max);
}

}  // namespace topoloc
