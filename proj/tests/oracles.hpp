// Independent oracles used by the tests: these deliberately avoid the
// implementation paths they check.
#pragma once

#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "topoloc/distance_map.hpp"
#include "topoloc/grid.hpp"
#include "topoloc/pose2.hpp"
#include "topoloc/rng.hpp"

namespace oracles {

inline Eigen::Matrix3d pose_matrix(const topoloc::Pose2D& p) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = std::cos(p.theta);
  m(0, 1) = -std::sin(p.theta);
  m(1, 0) = std::sin(p.theta);
  m(1, 1) = std::cos(p.theta);
  m(0, 2) = p.x;
  m(1, 2) = p.y;
  return m;
}

// O(cells x sources) nearest-source search in meters.
inline std::vector<double> brute_force_distance(
    const topoloc::OccupancyGrid& grid, topoloc::CellClass cls,
    double d_max) {
  std::vector<std::pair<int, int>> sources;
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix)
      if (grid.at(ix, iy) == cls) sources.emplace_back(ix, iy);
  std::vector<double> d(grid.cells.size(), d_max);
  if (sources.empty()) return d;
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [sx, sy] : sources) {
        const double dx = ix - sx, dy = iy - sy;
        best = std::min(best, dx * dx + dy * dy);
      }
      d[static_cast<size_t>(iy) * grid.width + ix] =
          std::min(std::sqrt(best) * grid.resolution, d_max);
    }
  }
  return d;
}

// Set-based IOU of occupied cells, ref transformed by X into cand's frame.
inline double set_iou(const topoloc::OccupancyGrid& ref,
                      const topoloc::OccupancyGrid& cand,
                      const topoloc::Pose2D& X) {
  std::set<std::pair<int, int>> tset, cset;
  for (int iy = 0; iy < ref.height; ++iy) {
    for (int ix = 0; ix < ref.width; ++ix) {
      if (!topoloc::is_occupied(ref.at(ix, iy))) continue;
      const Eigen::Vector2d p = topoloc::apply(X, ref.cell_center(ix, iy));
      const Eigen::Vector2d g =
          topoloc::apply(topoloc::inverse(cand.origin), p);
      tset.emplace(static_cast<int>(std::floor(g.x() / cand.resolution)),
                   static_cast<int>(std::floor(g.y() / cand.resolution)));
    }
  }
  for (int iy = 0; iy < cand.height; ++iy)
    for (int ix = 0; ix < cand.width; ++ix)
      if (topoloc::is_occupied(cand.at(ix, iy))) cset.emplace(ix, iy);
  if (tset.empty() && cset.empty()) return 0.0;
  size_t inter = 0;
  for (const auto& c : tset) inter += cset.count(c);
  const size_t uni = tset.size() + cset.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline topoloc::OccupancyGrid random_grid(uint64_t seed, int w, int h,
                                          double res, double p_wall,
                                          double p_curb) {
  topoloc::OccupancyGrid grid(w, h, res,
                              topoloc::Pose2D(-w * res / 2, -h * res / 2, 0));
  topoloc::Rng rng(seed);
  for (auto& c : grid.cells) {
    const double u = rng.uniform();
    if (u < p_wall) c = topoloc::CellClass::Wall;
    else if (u < p_wall + p_curb) c = topoloc::CellClass::Curb;
    else if (u < 0.7) c = topoloc::CellClass::Free;
  }
  return grid;
}

}  // namespace oracles
