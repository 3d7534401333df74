#include "topoloc/distance_map.hpp"

#include <cmath>
#include <limits>

#include "topoloc/parallel.hpp"

namespace topoloc {

namespace {

constexpr double kInf = 1e30;

// 1D squared distance transform via the lower envelope of parabolas
// (Felzenszwalb & Huttenlocher). Exact for integer-squared inputs.
void dt1d(const double* f, double* out, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + static_cast<double>(q) * q) -
                (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

template <bool Parallel>
DistanceMap transform_impl(const OccupancyGrid& grid, CellClass cls,
                           double d_max) {
  DistanceMap dm;
  dm.resolution = grid.resolution;
  dm.width = grid.width;
  dm.height = grid.height;
  dm.origin = grid.origin;
  dm.d_max = d_max;

  const int w = grid.width, h = grid.height;
  const size_t n = static_cast<size_t>(w) * h;
  dm.d.assign(n, static_cast<float>(d_max));
  dm.grad.assign(n, Eigen::Vector2f::Zero());

  size_t sources = 0;
  std::vector<double> sq(n);
  for (size_t i = 0; i < n; ++i) {
    const bool src = grid.cells[i] == cls;
    sq[i] = src ? 0.0 : kInf;
    sources += src;
  }
  if (sources == 0) {
    dm.no_source = true;
    return dm;
  }

  // Column pass, then row pass, each over independent 1D slices.
  auto column_pass = [&](int64_t ix) {
    std::vector<double> f(h), out(h), z(h + 1);
    std::vector<int> v(h);
    for (int iy = 0; iy < h; ++iy) f[iy] = sq[static_cast<size_t>(iy) * w + ix];
    dt1d(f.data(), out.data(), h, v.data(), z.data());
    for (int iy = 0; iy < h; ++iy) sq[static_cast<size_t>(iy) * w + ix] = out[iy];
  };
  auto row_pass = [&](int64_t iy) {
    std::vector<double> out(w), z(w + 1);
    std::vector<int> v(w);
    double* f = sq.data() + static_cast<size_t>(iy) * w;
    dt1d(f, out.data(), w, v.data(), z.data());
    for (int ix = 0; ix < w; ++ix) f[ix] = out[ix];
  };

  if constexpr (Parallel) {
    parallel_for(w, column_pass);
    parallel_for(h, row_pass);
  } else {
    for (int64_t ix = 0; ix < w; ++ix) column_pass(ix);
    for (int64_t iy = 0; iy < h; ++iy) row_pass(iy);
  }

  const float fd_max = static_cast<float>(d_max);
  auto finalize_row = [&](int64_t iy) {
    for (int ix = 0; ix < w; ++ix) {
      const size_t i = static_cast<size_t>(iy) * w + ix;
      dm.d[i] = std::min(
          static_cast<float>(std::sqrt(sq[i]) * grid.resolution), fd_max);
    }
  };
  if constexpr (Parallel) parallel_for(h, finalize_row);
  else for (int64_t iy = 0; iy < h; ++iy) finalize_row(iy);

  // Central differences; one-sided at borders; zero on truncated plateaus.
  const double inv2r = 1.0 / (2.0 * grid.resolution);
  const double invr = 1.0 / grid.resolution;
  auto grad_row = [&](int64_t iy) {
    for (int ix = 0; ix < w; ++ix) {
      const size_t i = static_cast<size_t>(iy) * w + ix;
      if (dm.d[i] >= fd_max) continue;
      double gx, gy;
      if (ix == 0) gx = (dm.at(1, iy) - dm.at(0, iy)) * invr;
      else if (ix == w - 1) gx = (dm.at(ix, iy) - dm.at(ix - 1, iy)) * invr;
      else gx = (dm.at(ix + 1, iy) - dm.at(ix - 1, iy)) * inv2r;
      if (iy == 0) gy = (dm.at(ix, 1) - dm.at(ix, 0)) * invr;
      else if (iy == h - 1) gy = (dm.at(ix, iy) - dm.at(ix, iy - 1)) * invr;
      else gy = (dm.at(ix, iy + 1) - dm.at(ix, iy - 1)) * inv2r;
      dm.grad[i] = Eigen::Vector2f(static_cast<float>(gx),
                                   static_cast<float>(gy));
    }
  };
  if constexpr (Parallel) parallel_for(h, grad_row);
  else for (int64_t iy = 0; iy < h; ++iy) grad_row(iy);

  return dm;
}

}  // namespace

DistanceMap distance_transform(const OccupancyGrid& grid, CellClass cls,
                               double d_max) {
  return transform_impl<true>(grid, cls, d_max);
}

namespace serial {
DistanceMap distance_transform(const OccupancyGrid& grid, CellClass cls,
                               double d_max) {
  return transform_impl<false>(grid, cls, d_max);
}
}  // namespace serial

bool DistanceMap::sample(const Eigen::Vector2d& p, double& value,
                         Eigen::Vector2d& gradient) const {
  const Eigen::Vector2d g = apply(inverse(origin), p);
  const double gx = g.x() / resolution - 0.5;
  const double gy = g.y() / resolution - 0.5;
  const int32_t ix = static_cast<int32_t>(std::floor(gx));
  const int32_t iy = static_cast<int32_t>(std::floor(gy));
  if (ix < 0 || iy < 0 || ix + 1 >= width || iy + 1 >= height) return false;
  const double fx = gx - ix, fy = gy - iy;
  const double d00 = at(ix, iy), d10 = at(ix + 1, iy);
  const double d01 = at(ix, iy + 1), d11 = at(ix + 1, iy + 1);
  value = (1 - fx) * (1 - fy) * d00 + fx * (1 - fy) * d10 +
          (1 - fx) * fy * d01 + fx * fy * d11;
  // Exact gradient of the bilinear surface, rotated into the scan frame.
  const double dgx = ((1 - fy) * (d10 - d00) + fy * (d11 - d01)) / resolution;
  const double dgy = ((1 - fx) * (d01 - d00) + fx * (d11 - d10)) / resolution;
  const double c = std::cos(origin.theta), s = std::sin(origin.theta);
  gradient = {c * dgx - s * dgy, s * dgx + c * dgy};
  return true;
}

}  // namespace topoloc
