#include "topoloc/grid_builder.hpp"

#include <cmath>
#include <cstdint>

namespace topoloc {

namespace {

// Marks cells along the 2D ray from the sensor (grid center) to the hit
// cell as free, excluding the hit cell; wall/curb cells are not demoted.
void trace_free(OccupancyGrid& grid, const Eigen::Vector2d& target,
                int32_t tx, int32_t ty) {
  int32_t sx, sy;
  grid.cell_index({0.0, 0.0}, sx, sy);
  int32_t x = sx, y = sy;
  const int32_t dx = std::abs(tx - sx), dy = std::abs(ty - sy);
  const int32_t stepx = tx > sx ? 1 : -1, stepy = ty > sy ? 1 : -1;
  int32_t err = dx - dy;
  (void)target;
  while (x != tx || y != ty) {
    if (grid.inside(x, y) && grid.at(x, y) == CellClass::Unknown)
      grid.set(x, y, CellClass::Free);
    const int32_t e2 = 2 * err;
    if (e2 > -dy) {
      err -= dy;
      x += stepx;
    }
    if (e2 < dx) {
      err += dx;
      y += stepy;
    }
  }
}

}  // namespace

ScanRecord project_cloud(const PointCloud& cloud,
                         const std::vector<Point>& curbs,
                         const GridConfig& cfg) {
  ScanRecord rec;
  rec.grid = OccupancyGrid::centered(cfg.extent, cfg.resolution);
  if (cloud.empty()) return rec;

  OccupancyGrid& grid = rec.grid;
  const size_t n_cells = grid.cells.size();

  // Wall hit counting in the height band.
  std::vector<uint16_t> hits(n_cells, 0);
  for (const Point& p : cloud.points) {
    if (p.z < cfg.wall_zmin || p.z > cfg.wall_zmax) continue;
    int32_t ix, iy;
    grid.cell_index({p.x, p.y}, ix, iy);
    if (!grid.inside(ix, iy)) continue;
    ++hits[static_cast<size_t>(iy) * grid.width + ix];
  }
  for (size_t i = 0; i < n_cells; ++i)
    if (hits[i] >= cfg.min_hits) grid.cells[i] = CellClass::Wall;

  // Curb cells override walls: the detector's height exclusion already
  // keeps structure out of its output, and matching treats curbs as the
  // more specific class.
  for (const Point& c : curbs) {
    int32_t ix, iy;
    grid.cell_index({c.x, c.y}, ix, iy);
    if (grid.inside(ix, iy)) grid.set(ix, iy, CellClass::Curb);
  }

  // Free space along rays to every return (ground hits included).
  for (const Point& p : cloud.points) {
    int32_t ix, iy;
    grid.cell_index({p.x, p.y}, ix, iy);
    // Clip the endpoint cell to the grid border along the ray if outside.
    if (!grid.inside(ix, iy)) {
      const Eigen::Vector2d g = apply(inverse(grid.origin), {p.x, p.y});
      const double cx = g.x() / grid.resolution, cy = g.y() / grid.resolution;
      double t = 1.0;
      if (cx < 0.0 || cx >= grid.width || cy < 0.0 || cy >= grid.height) {
        const Eigen::Vector2d g0 =
            apply(inverse(grid.origin), {0.0, 0.0});
        const double ox = g0.x() / grid.resolution,
                     oy = g0.y() / grid.resolution;
        const double vx = cx - ox, vy = cy - oy;
        t = 1.0;
        if (vx > 0) t = std::min(t, (grid.width - 1 - ox) / vx);
        if (vx < 0) t = std::min(t, (0 - ox) / vx);
        if (vy > 0) t = std::min(t, (grid.height - 1 - oy) / vy);
        if (vy < 0) t = std::min(t, (0 - oy) / vy);
        ix = static_cast<int32_t>(std::floor(ox + t * vx));
        iy = static_cast<int32_t>(std::floor(oy + t * vy));
        if (!grid.inside(ix, iy)) continue;
      }
    }
    trace_free(grid, {p.x, p.y}, ix, iy);
    // Ground returns mark their own cell free as well.
    if (std::abs(p.z) < cfg.wall_zmin && grid.at(ix, iy) == CellClass::Unknown)
      grid.set(ix, iy, CellClass::Free);
  }

  rec.wall_points = grid.cell_centers(CellClass::Wall);
  rec.curb_points = grid.cell_centers(CellClass::Curb);
  return rec;
}

void build_distance_maps(ScanRecord& rec, double d_max) {
  rec.wall_dmap = distance_transform(rec.grid, CellClass::Wall, d_max);
  rec.curb_dmap = distance_transform(rec.grid, CellClass::Curb, d_max);
}

}  // namespace topoloc
