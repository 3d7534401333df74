#include "topoloc/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"
#include "topoloc/rng.hpp"

namespace topoloc {

namespace {

constexpr int kDescBits = 256;
constexpr int kDescBytes = kDescBits / 8;
constexpr int kPatchHalf = 3;  // 7x7 patch
constexpr int kPatchBytes = (2 * kPatchHalf + 1) * (2 * kPatchHalf + 1);
constexpr int kBorderMargin = 32;
constexpr int kOrientRadius = 12;
constexpr int kPatternHalf = 20;

struct BriefPattern {
  std::array<int8_t, kDescBits * 4> v;  // px, py, qx, qy per bit
};

const BriefPattern& brief_pattern() {
  static const BriefPattern pattern = [] {
    BriefPattern p{};
    Rng rng(0xB81EFULL);
    for (int i = 0; i < kDescBits * 4; ++i)
      p.v[i] = static_cast<int8_t>(
          static_cast<int>(rng.uniform_index(2 * kPatternHalf + 1)) -
          kPatternHalf);
    return p;
  }();
  return pattern;
}

template <bool Parallel>
std::vector<float> response_impl(const ImageU8& img) {
  const int w = img.width, h = img.height;
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<float> ixx(n, 0.0f), iyy(n, 0.0f), ixy(n, 0.0f);

  auto grad_row = [&](int64_t y) {
    if (y == 0 || y == h - 1) return;
    for (int x = 1; x < w - 1; ++x) {
      const auto px = [&](int dx, int dy) {
        return static_cast<float>(img.at(x + dx, static_cast<int32_t>(y) + dy));
      };
      const float gx = (px(1, -1) + 2 * px(1, 0) + px(1, 1)) -
                       (px(-1, -1) + 2 * px(-1, 0) + px(-1, 1));
      const float gy = (px(-1, 1) + 2 * px(0, 1) + px(1, 1)) -
                       (px(-1, -1) + 2 * px(0, -1) + px(1, -1));
      const size_t i = static_cast<size_t>(y) * w + x;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  };
  if constexpr (Parallel) parallel_for(h, grad_row);
  else for (int64_t y = 0; y < h; ++y) grad_row(y);

  // 5-tap binomial smoothing of the structure tensor, horizontal then
  // vertical, applied to each channel.
  static const float kKernel[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16,
                                   1.f / 16};
  for (std::vector<float>* ch : {&ixx, &iyy, &ixy}) {
    std::vector<float> tmp(n, 0.0f);
    auto hpass = [&](int64_t y) {
      for (int x = 2; x < w - 2; ++x) {
        float acc = 0.0f;
        for (int k = -2; k <= 2; ++k)
          acc += kKernel[k + 2] * (*ch)[static_cast<size_t>(y) * w + x + k];
        tmp[static_cast<size_t>(y) * w + x] = acc;
      }
    };
    if constexpr (Parallel) parallel_for(h, hpass);
    else for (int64_t y = 0; y < h; ++y) hpass(y);
    auto vpass = [&](int64_t y) {
      if (y < 2 || y >= h - 2) return;
      for (int x = 0; x < w; ++x) {
        float acc = 0.0f;
        for (int k = -2; k <= 2; ++k)
          acc += kKernel[k + 2] * tmp[static_cast<size_t>(y + k) * w + x];
        (*ch)[static_cast<size_t>(y) * w + x] = acc;
      }
    };
    if constexpr (Parallel) parallel_for(h, vpass);
    else for (int64_t y = 0; y < h; ++y) vpass(y);
  }

  std::vector<float> resp(n, 0.0f);
  auto rpass = [&](int64_t y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const float det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
      const float tr = ixx[i] + iyy[i];
      resp[i] = det - 0.04f * tr * tr;
    }
  };
  if constexpr (Parallel) parallel_for(h, rpass);
  else for (int64_t y = 0; y < h; ++y) rpass(y);
  return resp;
}

// Smoothed copy for orientation and descriptor sampling; raw class
// renders flip descriptor bits on single-cell rasterization shifts.
std::vector<float> blur_image(const ImageU8& img, int passes) {
  const int w = img.width, h = img.height;
  std::vector<float> a(img.data.begin(), img.data.end()), tmp(a.size());
  static const float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16,
                             1.f / 16};
  for (int pass = 0; pass < passes; ++pass) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float acc = 0.f;
        for (int t = -2; t <= 2; ++t)
          acc += k[t + 2] *
                 a[static_cast<size_t>(y) * w + std::clamp(x + t, 0, w - 1)];
        tmp[static_cast<size_t>(y) * w + x] = acc;
      }
    }
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        float acc = 0.f;
        for (int t = -2; t <= 2; ++t)
          acc += k[t + 2] *
                 tmp[static_cast<size_t>(std::clamp(y + t, 0, h - 1)) * w + x];
        a[static_cast<size_t>(y) * w + x] = acc;
      }
    }
  }
  return a;
}

struct Smoothed {
  const std::vector<float>* data;
  int width, height;
  float at(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return (*data)[static_cast<size_t>(y) * width + x];
  }
};

double orientation_at(const Smoothed& img, int cx, int cy) {
  double m10 = 0.0, m01 = 0.0;
  for (int dy = -kOrientRadius; dy <= kOrientRadius; ++dy) {
    for (int dx = -kOrientRadius; dx <= kOrientRadius; ++dx) {
      if (dx * dx + dy * dy > kOrientRadius * kOrientRadius) continue;
      const double v = img.at(cx + dx, cy + dy);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  if (m10 == 0.0 && m01 == 0.0) return 0.0;
  return std::atan2(m01, m10);
}

std::vector<uint8_t> binary_descriptor(const Smoothed& img, int cx, int cy,
                                       double angle) {
  const BriefPattern& pat = brief_pattern();
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<uint8_t> desc(kDescBytes, 0);
  for (int b = 0; b < kDescBits; ++b) {
    const double px = pat.v[4 * b + 0], py = pat.v[4 * b + 1];
    const double qx = pat.v[4 * b + 2], qy = pat.v[4 * b + 3];
    const int ax = cx + static_cast<int>(std::lround(c * px - s * py));
    const int ay = cy + static_cast<int>(std::lround(s * px + c * py));
    const int bx = cx + static_cast<int>(std::lround(c * qx - s * qy));
    const int by = cy + static_cast<int>(std::lround(s * qx + c * qy));
    if (img.at(ax, ay) < img.at(bx, by))
      desc[b / 8] |= static_cast<uint8_t>(1u << (b % 8));
  }
  return desc;
}

std::vector<uint8_t> patch_descriptor(const Smoothed& img, int cx, int cy) {
  std::vector<uint8_t> desc(kPatchBytes);
  int k = 0;
  for (int dy = -kPatchHalf; dy <= kPatchHalf; ++dy)
    for (int dx = -kPatchHalf; dx <= kPatchHalf; ++dx)
      desc[k++] = static_cast<uint8_t>(
          std::clamp(img.at(cx + dx, cy + dy), 0.f, 255.f));
  return desc;
}

double hamming_distance(const std::vector<uint8_t>& a,
                        const std::vector<uint8_t>& b) {
  uint64_t wa[4], wb[4];
  std::memcpy(wa, a.data(), 32);
  std::memcpy(wb, b.data(), 32);
  int d = 0;
  for (int i = 0; i < 4; ++i) d += std::popcount(wa[i] ^ wb[i]);
  return d;
}

// Zero-mean, unit-norm patch vector for L2 matching.
std::vector<float> normalized_patch(const std::vector<uint8_t>& desc) {
  std::vector<float> v(desc.size());
  double mean = 0.0;
  for (uint8_t b : desc) mean += b;
  mean /= static_cast<double>(desc.size());
  double norm2 = 0.0;
  for (size_t i = 0; i < desc.size(); ++i) {
    v[i] = static_cast<float>(desc[i] - mean);
    norm2 += static_cast<double>(v[i]) * v[i];
  }
  const float inv =
      norm2 > 0.0 ? static_cast<float>(1.0 / std::sqrt(norm2)) : 0.0f;
  for (float& x : v) x *= inv;
  return v;
}

}  // namespace

std::vector<float> corner_response(const ImageU8& img) {
  return response_impl<true>(img);
}
namespace serial {
std::vector<float> corner_response(const ImageU8& img) {
  return response_impl<false>(img);
}
}  // namespace serial

std::vector<Feature> detect_features(const OccupancyGrid& grid,
                                     FeatureKind kind, int max_n) {
  const ImageU8 img = render_grid(grid);
  const int w = img.width, h = img.height;
  if (w < 2 * kBorderMargin + 1 || h < 2 * kBorderMargin + 1 || max_n <= 0)
    return {};
  const std::vector<float> resp = corner_response(img);

  float max_resp = 0.0f;
  for (float r : resp) max_resp = std::max(max_resp, r);
  if (max_resp <= 0.0f) return {};
  const float thresh = 0.0003f * max_resp;

  // Features must sit on occupied structure: corner responses in free
  // space are occlusion-shadow artifacts that move with the vantage point.
  auto near_structure = [&](int x, int y) {
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx)
        if (grid.inside(x + dx, y + dy) &&
            is_occupied(grid.at(x + dx, y + dy)))
          return true;
    return false;
  };

  // 3x3 non-max suppression with index tie-breaking.
  std::vector<std::pair<float, int64_t>> peaks;
  for (int y = kBorderMargin; y < h - kBorderMargin; ++y) {
    for (int x = kBorderMargin; x < w - kBorderMargin; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const float r = resp[i];
      if (r <= thresh) continue;
      if (!near_structure(x, y)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const size_t j = static_cast<size_t>(y + dy) * w + (x + dx);
          if (resp[j] > r || (resp[j] == r && j < i)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.emplace_back(r, static_cast<int64_t>(i));
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  if (static_cast<int>(peaks.size()) > max_n) peaks.resize(max_n);

  const std::vector<float> blurred = blur_image(img, 2);
  const Smoothed smooth{&blurred, w, h};

  std::vector<Feature> out;
  out.reserve(peaks.size());
  for (const auto& [r, idx] : peaks) {
    const int x = static_cast<int>(idx % w), y = static_cast<int>(idx / w);
    // Sub-pixel refinement by a 1D quadratic fit per axis.
    auto refine = [&](float rm, float r0, float rp) {
      const float denom = rm - 2 * r0 + rp;
      if (denom >= 0.0f) return 0.0f;
      return std::clamp(0.5f * (rm - rp) / denom, -0.5f, 0.5f);
    };
    const float dx = refine(resp[idx - 1], r, resp[idx + 1]);
    const float dy = refine(resp[idx - w], r, resp[idx + w]);

    Feature f;
    f.pos = {x + dx, y + dy};
    f.response = r;
    f.kind = kind;
    if (kind == FeatureKind::OrientedBinary) {
      const double angle = orientation_at(smooth, x, y);
      f.desc = binary_descriptor(smooth, x, y, angle);
    } else {
      f.desc = patch_descriptor(smooth, x, y);
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Correspondence> match_features(const std::vector<Feature>& ref,
                                           const std::vector<Feature>& cand,
                                           double ratio_max) {
  if (ref.empty() || cand.empty()) return {};
  const FeatureKind kind = ref.front().kind;
  for (const Feature& f : cand)
    if (f.kind != kind) throw InvalidParams("mixed feature kinds in match");

  std::vector<std::vector<float>> cand_norm, ref_norm;
  if (kind == FeatureKind::CornerScore) {
    cand_norm.reserve(cand.size());
    for (const Feature& f : cand) cand_norm.push_back(normalized_patch(f.desc));
    ref_norm.reserve(ref.size());
    for (const Feature& f : ref) ref_norm.push_back(normalized_patch(f.desc));
  }

  std::vector<Correspondence> out;
  for (size_t i = 0; i < ref.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    int32_t best_j = -1;
    for (size_t j = 0; j < cand.size(); ++j) {
      double d;
      if (kind == FeatureKind::OrientedBinary) {
        d = hamming_distance(ref[i].desc, cand[j].desc);
      } else {
        double dot = 0.0;
        const auto& a = ref_norm[i];
        const auto& b = cand_norm[j];
        for (size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
        d = std::max(0.0, 2.0 - 2.0 * dot);  // squared L2 of unit vectors
      }
      if (d < best) {
        second = best;
        best = d;
        best_j = static_cast<int32_t>(j);
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j < 0) continue;
    // An exact-zero distance is a definite match even when duplicated.
    if (best == 0.0 || best < ratio_max * second)
      out.push_back({static_cast<int32_t>(i), best_j, best});
  }
  return out;
}

Eigen::Vector2d feature_point(const OccupancyGrid& grid, const Feature& f) {
  return apply(grid.origin, {(f.pos.x() + 0.5) * grid.resolution,
                             (f.pos.y() + 0.5) * grid.resolution});
}

Pose2D procrustes2d(
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& pairs) {
  if (pairs.size() < 2) throw DegenerateInput("procrustes needs >= 2 pairs");
  Eigen::Vector2d rc = Eigen::Vector2d::Zero(), cc = Eigen::Vector2d::Zero();
  for (const auto& [r, c] : pairs) {
    rc += r;
    cc += c;
  }
  rc /= static_cast<double>(pairs.size());
  cc /= static_cast<double>(pairs.size());
  double sc = 0.0, ss = 0.0;
  for (const auto& [r, c] : pairs) {
    const Eigen::Vector2d rp = r - rc, cp = c - cc;
    sc += rp.x() * cp.x() + rp.y() * cp.y();
    ss += rp.x() * cp.y() - rp.y() * cp.x();
  }
  const double theta = std::atan2(ss, sc);
  const double co = std::cos(theta), si = std::sin(theta);
  return {cc.x() - (co * rc.x() - si * rc.y()),
          cc.y() - (si * rc.x() + co * rc.y()), theta};
}

std::optional<InitialTransform> estimate_initial_transform(
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& pairs,
    double inlier_tol, int min_inliers, int iters, uint64_t seed) {
  if (pairs.size() < 2) return std::nullopt;
  const size_t n = pairs.size();
  Rng rng(seed);

  auto count_inliers = [&](const Pose2D& X, std::vector<int32_t>* idx) {
    int count = 0;
    for (size_t i = 0; i < n; ++i) {
      if ((apply(X, pairs[i].first) - pairs[i].second).norm() < inlier_tol) {
        ++count;
        if (idx) idx->push_back(static_cast<int32_t>(i));
      }
    }
    return count;
  };

  Pose2D best;
  int best_count = -1;
  for (int it = 0; it < iters; ++it) {
    const size_t i = rng.uniform_index(n);
    const size_t j = rng.uniform_index(n);
    if (i == j) continue;
    const Eigen::Vector2d dr = pairs[j].first - pairs[i].first;
    const Eigen::Vector2d dc = pairs[j].second - pairs[i].second;
    if (dr.norm() < 1e-9) continue;
    const double theta = std::atan2(dr.x() * dc.y() - dr.y() * dc.x(),
                                    dr.dot(dc));
    const double co = std::cos(theta), si = std::sin(theta);
    const Eigen::Vector2d t =
        pairs[i].second - Eigen::Vector2d(co * pairs[i].first.x() -
                                              si * pairs[i].first.y(),
                                          si * pairs[i].first.x() +
                                              co * pairs[i].first.y());
    const Pose2D X(t.x(), t.y(), theta);
    const int count = count_inliers(X, nullptr);
    if (count > best_count) {
      best_count = count;
      best = X;
    }
  }
  if (best_count < std::max(min_inliers, 2)) return std::nullopt;

  // Procrustes refit on the consensus set, then a final inlier pass.
  std::vector<int32_t> idx;
  count_inliers(best, &idx);
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> sel;
  sel.reserve(idx.size());
  for (int32_t i : idx) sel.push_back(pairs[i]);
  const Pose2D refined = procrustes2d(sel);

  InitialTransform out;
  out.pose = refined;
  const int final_count = count_inliers(refined, &out.inliers);
  if (final_count < min_inliers) return std::nullopt;
  return out;
}

}  // namespace topoloc
