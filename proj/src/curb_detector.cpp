#include "topoloc/curb_detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"
#include "topoloc/rng.hpp"

namespace topoloc {

namespace {

template <bool Parallel>
std::vector<int32_t> window_filter_impl(const RangeImage& ri,
                                        const CurbParams& p) {
  if (ri.cols < p.std_window)
    throw InvalidParams("range image narrower than std_window");
  const int rows = ri.rows, cols = ri.cols;
  const int left = (p.std_window - 1) / 2;
  const int right = p.std_window / 2;

  std::vector<uint8_t> keep(static_cast<size_t>(rows) * cols, 0);
  size_t n_valid = 0;
  for (float r : ri.range) n_valid += r > 0.0f;
  if (n_valid == 0) throw EmptyImage("no valid returns");

  auto process_ring = [&](int64_t r) {
    for (int c = 0; c < cols; ++c) {
      if (!ri.valid(r, c)) continue;
      int count = 0;
      double sum = 0.0, sumsq = 0.0;
      for (int k = -left; k <= right; ++k) {
        const int cc = (c + k + cols) % cols;
        const float v = ri.at(static_cast<int32_t>(r), cc);
        if (v <= 0.0f) continue;
        ++count;
        sum += v;
        sumsq += static_cast<double>(v) * v;
      }
      if (count < 2) continue;
      const double mean = sum / count;
      const double var = std::max(0.0, sumsq / count - mean * mean);
      if (var < p.sigma_threshold)
        keep[static_cast<size_t>(r) * cols + c] = 1;
    }
  };
  if constexpr (Parallel) parallel_for(rows, process_ring);
  else for (int64_t r = 0; r < rows; ++r) process_ring(r);

  std::vector<int32_t> out;
  for (size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) out.push_back(ri.index[i]);
  return out;
}

}  // namespace

std::vector<int32_t> range_std_window_filter(const RangeImage& ri,
                                             const CurbParams& p) {
  return window_filter_impl<true>(ri, p);
}

namespace serial {
std::vector<int32_t> range_std_window_filter(const RangeImage& ri,
                                             const CurbParams& p) {
  return window_filter_impl<false>(ri, p);
}
}  // namespace serial

std::vector<Point> weighted_center_sample(const std::vector<Point>& points,
                                          double sigma_y, size_t n,
                                          uint64_t seed) {
  if (points.empty()) throw EmptyImage("no points to sample");
  if (n >= points.size()) return points;

  // Weighted sampling without replacement (Efraimidis-Spirakis), ranked by
  // log(u)/w = log(u) * exp(y^2 / (2 sigma_y^2)) to stay finite.
  Rng rng(seed);
  const double inv2s2 = 1.0 / (2.0 * sigma_y * sigma_y);
  std::vector<std::pair<double, int32_t>> keys(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    double u = rng.uniform();
    if (u < 1e-300) u = 1e-300;
    const double key =
        std::log(u) * std::exp(points[i].y * points[i].y * inv2s2);
    keys[i] = {key, static_cast<int32_t>(i)};
  }
  std::nth_element(keys.begin(), keys.begin() + n, keys.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first ||
                            (a.first == b.first && a.second < b.second);
                   });
  std::vector<int32_t> sel(n);
  for (size_t i = 0; i < n; ++i) sel[i] = keys[i].second;
  std::sort(sel.begin(), sel.end());

  std::vector<Point> out;
  out.reserve(n);
  for (int32_t i : sel) out.push_back(points[i]);
  return out;
}

PlaneFit ransac_fit_plane(const std::vector<Point>& points,
                          double d_threshold, int iters, uint64_t seed) {
  if (points.size() < 3) throw DegenerateInput("plane fit needs >= 3 points");
  const size_t n = points.size();
  Rng rng(seed);

  auto pt = [&](size_t i) {
    return Eigen::Vector3d(points[i].x, points[i].y, points[i].z);
  };

  Eigen::Vector3d best_n = Eigen::Vector3d::Zero();
  double best_d = 0.0;
  int best_count = -1;
  for (int it = 0; it < iters; ++it) {
    const size_t i0 = rng.uniform_index(n);
    const size_t i1 = rng.uniform_index(n);
    const size_t i2 = rng.uniform_index(n);
    if (i0 == i1 || i0 == i2 || i1 == i2) continue;
    const Eigen::Vector3d a = pt(i0), b = pt(i1), c = pt(i2);
    Eigen::Vector3d nrm = (b - a).cross(c - a);
    const double scale = (b - a).norm() * (c - a).norm();
    if (scale <= 0.0 || nrm.norm() < 1e-9 * scale) continue;
    nrm.normalize();
    const double d = -nrm.dot(a);
    int count = 0;
    for (size_t i = 0; i < n; ++i)
      if (std::abs(nrm.dot(pt(i)) + d) < d_threshold) ++count;
    if (count > best_count) {
      best_count = count;
      best_n = nrm;
      best_d = d;
    }
  }
  if (best_count < 3) throw DegenerateInput("all plane samples collinear");

  // Least-squares refit on the consensus set, then final inlier pass.
  std::vector<int32_t> inliers;
  for (size_t i = 0; i < n; ++i)
    if (std::abs(best_n.dot(pt(i)) + best_d) < d_threshold)
      inliers.push_back(static_cast<int32_t>(i));

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int32_t i : inliers) centroid += pt(i);
  centroid /= static_cast<double>(inliers.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int32_t i : inliers) {
    const Eigen::Vector3d q = pt(i) - centroid;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d nrm = eig.eigenvectors().col(0);
  if (nrm.z() < 0.0) nrm = -nrm;
  const double d = -nrm.dot(centroid);

  PlaneFit fit;
  for (size_t i = 0; i < n; ++i)
    if (std::abs(nrm.dot(pt(i)) + d) < d_threshold)
      fit.inliers.push_back(static_cast<int32_t>(i));
  fit.R = Eigen::Quaterniond::FromTwoVectors(nrm, Eigen::Vector3d::UnitZ())
              .toRotationMatrix();
  fit.t = Eigen::Vector3d(0.0, 0.0, -(fit.R * centroid).z());
  return fit;
}

namespace {

// Binary dilation by a w x h ones kernel; columns wrap (azimuth), rows clamp.
std::vector<uint8_t> dilate(const std::vector<uint8_t>& mask, int rows,
                            int cols, int w, int h) {
  const int wl = w / 2;
  const int hl = h / 2, hr = h - 1 - h / 2;
  std::vector<uint8_t> horiz(mask.size(), 0), out(mask.size(), 0);
  for (int r = 0; r < rows; ++r) {
    const uint8_t* row = mask.data() + static_cast<size_t>(r) * cols;
    uint8_t* dst = horiz.data() + static_cast<size_t>(r) * cols;
    // prefix counts over a doubled row for circular windows
    std::vector<int> pref(2 * cols + 1, 0);
    for (int c = 0; c < 2 * cols; ++c) pref[c + 1] = pref[c] + row[c % cols];
    for (int c = 0; c < cols; ++c) {
      if (w >= cols) {
        dst[c] = pref[cols] > 0;
      } else {
        const int lo = ((c - wl) % cols + cols) % cols;
        dst[c] = (pref[lo + w] - pref[lo]) > 0;
      }
    }
  }
  for (int c = 0; c < cols; ++c) {
    std::vector<int> pref(rows + 1, 0);
    for (int r = 0; r < rows; ++r)
      pref[r + 1] = pref[r] + horiz[static_cast<size_t>(r) * cols + c];
    for (int r = 0; r < rows; ++r) {
      const int lo = std::max(0, r - hl), hi = std::min(rows - 1, r + hr);
      out[static_cast<size_t>(r) * cols + c] = (pref[hi + 1] - pref[lo]) > 0;
    }
  }
  return out;
}

}  // namespace

std::vector<Point> detect_curbs(const PointCloud& cloud, const CurbParams& p,
                                uint64_t seed, CurbDebug* debug) {
  const RangeImage ri = RangeImage::from_cloud(cloud);
  const std::vector<int32_t> kept = range_std_window_filter(ri, p);

  std::vector<Point> flat;
  flat.reserve(kept.size());
  for (int32_t i : kept) flat.push_back(cloud.points[i]);
  const std::vector<Point> sampled = weighted_center_sample(
      flat, p.sigma_y, static_cast<size_t>(p.sample_n), mix64(seed, 1));
  const PlaneFit fit =
      ransac_fit_plane(sampled, p.d_threshold, p.ransac_iters, mix64(seed, 2));

  std::vector<Eigen::Vector3d> leveled(cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& q = cloud.points[i];
    leveled[i] = fit.apply(Eigen::Vector3d(q.x, q.y, q.z));
  }

  // Row-upsampled range view; height masks per Algorithm 2.
  const int f = std::max(1, p.upsample_factor);
  const int rows = ri.rows * f, cols = ri.cols;
  const size_t npx = static_cast<size_t>(rows) * cols;
  std::vector<uint8_t> mask1(npx, 0), mask2(npx, 0);
  auto src_index = [&](int r, int c) {
    return ri.index_at(r / f, c);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int32_t si = src_index(r, c);
      if (si < 0) continue;
      const double z = leveled[si].z();
      const size_t i = static_cast<size_t>(r) * cols + c;
      mask1[i] = z < p.curb_height;
      mask2[i] = std::abs(z) > 3.0 * p.curb_height;
    }
  }
  const std::vector<uint8_t> excl =
      dilate(mask2, rows, cols, p.dilate_w, p.dilate_h);
  std::vector<uint8_t> ground(npx, 0);
  for (size_t i = 0; i < npx; ++i) ground[i] = mask1[i] && !excl[i];

  // Edge pixels: ground pixels with a valid non-ground 4-neighbor at a
  // comparable range. No-return neighbors are field-of-view edges, not
  // curbs, and never fire.
  std::vector<uint8_t> edge(npx, 0);
  std::vector<uint8_t> emitted(cloud.points.size(), 0);
  std::vector<Point> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const size_t i = static_cast<size_t>(r) * cols + c;
      if (!ground[i]) continue;
      const float range_px = ri.at(r / f, c);
      bool is_edge = false;
      const int dr[4] = {-1, 1, 0, 0};
      const int dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4 && !is_edge; ++k) {
        const int nr = r + dr[k];
        const int nc = (c + dc[k] + cols) % cols;
        if (nr < 0 || nr >= rows) continue;
        const size_t ni = static_cast<size_t>(nr) * cols + nc;
        if (ground[ni]) continue;
        const int32_t nsi = src_index(nr, nc);
        if (nsi < 0) continue;  // FOV / max-range boundary
        const float range_nb = ri.at(nr / f, nc);
        if (std::abs(range_nb - range_px) > p.edge_range_gap) continue;
        is_edge = true;
      }
      if (!is_edge) continue;
      edge[i] = 1;
      const int32_t si = src_index(r, c);
      if (si < 0 || emitted[si]) continue;
      const Eigen::Vector3d& q = leveled[si];
      if (std::abs(q.z()) > p.curb_height) continue;
      emitted[si] = 1;
      Point cp = cloud.points[si];
      cp.x = q.x();
      cp.y = q.y();
      cp.z = q.z();
      out.push_back(cp);
    }
  }

  if (debug) {
    debug->rows = rows;
    debug->cols = cols;
    debug->ground_mask = std::move(ground);
    debug->exclusion_mask = excl;
    debug->edge_mask = std::move(edge);
  }
  return out;
}

}  // namespace topoloc
