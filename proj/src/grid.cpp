#include "topoloc/grid.hpp"

#include <cmath>
#include <unordered_set>

namespace topoloc {

OccupancyGrid OccupancyGrid::centered(double extent, double res) {
  const int32_t n = static_cast<int32_t>(std::lround(extent / res));
  return OccupancyGrid(n, n, res, Pose2D{-extent / 2.0, -extent / 2.0, 0.0});
}

void OccupancyGrid::cell_index(const Eigen::Vector2d& p, int32_t& ix,
                               int32_t& iy) const {
  const Eigen::Vector2d g = apply(inverse(origin), p);
  ix = static_cast<int32_t>(std::floor(g.x() / resolution));
  iy = static_cast<int32_t>(std::floor(g.y() / resolution));
}

size_t OccupancyGrid::count(CellClass c) const {
  size_t n = 0;
  for (CellClass v : cells)
    if (v == c) ++n;
  return n;
}

std::vector<Eigen::Vector2d> OccupancyGrid::cell_centers(CellClass c) const {
  std::vector<Eigen::Vector2d> out;
  for (int32_t iy = 0; iy < height; ++iy)
    for (int32_t ix = 0; ix < width; ++ix)
      if (at(ix, iy) == c) out.push_back(cell_center(ix, iy));
  return out;
}

namespace {
inline int64_t pack_cell(int32_t ix, int32_t iy) {
  return (static_cast<int64_t>(ix) << 32) |
         static_cast<uint32_t>(iy);
}
}  // namespace

double grid_iou(const OccupancyGrid& ref, const OccupancyGrid& cand,
                const Pose2D& X) {
  size_t cand_occ = 0;
  for (CellClass c : cand.cells)
    if (is_occupied(c)) ++cand_occ;

  // Rasterize transformed ref cell centers into cand's lattice, dedup.
  std::unordered_set<int64_t> transformed;
  const Pose2D to_cand_grid = compose(inverse(cand.origin), X);
  for (int32_t iy = 0; iy < ref.height; ++iy) {
    for (int32_t ix = 0; ix < ref.width; ++ix) {
      if (!is_occupied(ref.at(ix, iy))) continue;
      const Eigen::Vector2d g = apply(to_cand_grid, ref.cell_center(ix, iy));
      const int32_t cx =
          static_cast<int32_t>(std::floor(g.x() / cand.resolution));
      const int32_t cy =
          static_cast<int32_t>(std::floor(g.y() / cand.resolution));
      transformed.insert(pack_cell(cx, cy));
    }
  }

  if (transformed.empty() && cand_occ == 0) return 0.0;

  size_t inter = 0;
  for (int64_t key : transformed) {
    const int32_t cx = static_cast<int32_t>(key >> 32);
    const int32_t cy = static_cast<int32_t>(key & 0xffffffff);
    if (cand.inside(cx, cy) && is_occupied(cand.at(cx, cy))) ++inter;
  }
  const size_t uni = transformed.size() + cand_occ - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ImageU8 render_grid(const OccupancyGrid& grid) {
  ImageU8 img;
  img.width = grid.width;
  img.height = grid.height;
  img.data.resize(grid.cells.size());
  for (size_t i = 0; i < grid.cells.size(); ++i) {
    switch (grid.cells[i]) {
      case CellClass::Wall: img.data[i] = kRenderWall; break;
      case CellClass::Curb: img.data[i] = kRenderCurb; break;
      case CellClass::Free: img.data[i] = kRenderFree; break;
      default: img.data[i] = kRenderUnknown; break;
    }
  }
  return img;
}

}  // namespace topoloc
