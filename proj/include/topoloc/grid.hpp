#pragma once

#include <cstdint>
#include <vector>

#include "topoloc/pose2.hpp"

namespace topoloc {

enum class CellClass : uint8_t { Unknown = 0, Free = 1, Wall = 2, Curb = 3 };

inline bool is_occupied(CellClass c) {
  return c == CellClass::Wall || c == CellClass::Curb;
}

// 2D projected scan. `origin` maps the grid frame (cell (0,0) at its
// lower-left corner) into the scan frame; cell (ix, iy) has its center at
// apply(origin, ((ix+0.5)*res, (iy+0.5)*res)).
struct OccupancyGrid {
  double resolution = 0.2;
  int32_t width = 0;
  int32_t height = 0;
  Pose2D origin;
  std::vector<CellClass> cells;  // row-major, index = iy*width + ix

  OccupancyGrid() = default;
  OccupancyGrid(int32_t w, int32_t h, double res, const Pose2D& org)
      : resolution(res), width(w), height(h), origin(org),
        cells(static_cast<size_t>(w) * h, CellClass::Unknown) {}

  // Square grid of `extent` meters centered on the scan origin.
  static OccupancyGrid centered(double extent, double res);

  bool inside(int32_t ix, int32_t iy) const {
    return ix >= 0 && iy >= 0 && ix < width && iy < height;
  }
  CellClass at(int32_t ix, int32_t iy) const {
    return cells[static_cast<size_t>(iy) * width + ix];
  }
  void set(int32_t ix, int32_t iy, CellClass c) {
    cells[static_cast<size_t>(iy) * width + ix] = c;
  }

  Eigen::Vector2d cell_center(int32_t ix, int32_t iy) const {
    return apply(origin, {(ix + 0.5) * resolution, (iy + 0.5) * resolution});
  }
  // Scan-frame point -> cell index (may be out of bounds).
  void cell_index(const Eigen::Vector2d& p, int32_t& ix, int32_t& iy) const;

  size_t count(CellClass c) const;
  std::vector<Eigen::Vector2d> cell_centers(CellClass c) const;
};

// Intersection-over-union of occupied (wall|curb) cells of `ref`,
// transformed by X into cand's frame, against cand's occupied cells.
// Transformed ref cell centers are rasterized into cand's lattice (and
// deduplicated). Returns 0 when neither grid has occupied cells.
double grid_iou(const OccupancyGrid& ref, const OccupancyGrid& cand,
                const Pose2D& X);

// 8-bit rendering used by the corner detectors; the class->intensity
// mapping is part of the serialized format contract.
struct ImageU8 {
  int32_t width = 0;
  int32_t height = 0;
  std::vector<uint8_t> data;

  uint8_t at(int32_t x, int32_t y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
};

constexpr uint8_t kRenderWall = 255;
constexpr uint8_t kRenderCurb = 160;
constexpr uint8_t kRenderFree = 60;
constexpr uint8_t kRenderUnknown = 0;

ImageU8 render_grid(const OccupancyGrid& grid);

}  // namespace topoloc
