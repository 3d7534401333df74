#include "topoloc/scan_matcher.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"

namespace topoloc {

namespace {

struct Acc {
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double cost = 0.0;
};

template <bool Parallel>
NormalEquations accumulate_impl(const Pose2D& X, const FactorSet& factors,
                                const FactorWeights& weights) {
  const double co = std::cos(X.theta), si = std::sin(X.theta);
  const size_t n_pairs = factors.pairs.size();
  const size_t n_wall =
      factors.wall_points && factors.wall_dmap && factors.wall_dmap->valid()
          ? factors.wall_points->size()
          : 0;
  const size_t n_curb =
      factors.curb_points && factors.curb_dmap && factors.curb_dmap->valid()
          ? factors.curb_points->size()
          : 0;
  const int64_t total = static_cast<int64_t>(n_pairs + n_wall + n_curb);

  // Omega weights are per factor type; each residual carries omega / N of
  // its type so a dense point set cannot drown out the sparse ones.
  const double wf = n_pairs ? weights.omega_f / n_pairs : 0.0;
  const double ww = n_wall ? weights.omega_w / n_wall : 0.0;
  const double wc = n_curb ? weights.omega_c / n_curb : 0.0;

  auto add_pair = [&](Acc& acc, const PointPair& pp) {
    const Eigen::Vector2d t = apply(X, pp.r);
    const Eigen::Vector2d r2 = t - pp.c;
    Eigen::Matrix<double, 2, 3> J;
    J << 1, 0, -si * pp.r.x() - co * pp.r.y(),
         0, 1,  co * pp.r.x() - si * pp.r.y();
    acc.H += wf * J.transpose() * J;
    acc.b += wf * J.transpose() * r2;
    acc.cost += wf * r2.squaredNorm();
  };
  auto add_dmap = [&](Acc& acc, const Eigen::Vector2d& p,
                      const DistanceMap& dmap, double omega) {

    const Eigen::Vector2d t = apply(X, p);
    double d;
    Eigen::Vector2d g;
    if (!dmap.sample(t, d, g)) return;  // outside: zero residual, zero J
    Eigen::Vector3d J;
    J << g.x(), g.y(),
        g.x() * (-si * p.x() - co * p.y()) + g.y() * (co * p.x() - si * p.y());
    acc.H += omega * J * J.transpose();
    acc.b += omega * J * d;
    acc.cost += omega * d * d;
  };
  auto partial = [&](int64_t lo, int64_t hi, Acc& acc) {
    for (int64_t k = lo; k < hi; ++k) {
      const size_t i = static_cast<size_t>(k);
      if (i < n_pairs) {
        add_pair(acc, factors.pairs[i]);
      } else if (i < n_pairs + n_wall) {
        add_dmap(acc, (*factors.wall_points)[i - n_pairs],
                 *factors.wall_dmap, ww);
      } else {
        add_dmap(acc, (*factors.curb_points)[i - n_pairs - n_wall],
                 *factors.curb_dmap, wc);
      }
    }
  };
  auto join = [](Acc& total_acc, const Acc& part) {
    total_acc.H += part.H;
    total_acc.b += part.b;
    total_acc.cost += part.cost;
  };

  Acc result;
  if constexpr (Parallel) {
    result = chunked_reduce<Acc>(total, 512, partial, join);
  } else {
    const int64_t chunk = 512;
    for (int64_t lo = 0; lo < total; lo += chunk) {
      Acc part;
      partial(lo, std::min(total, lo + chunk), part);
      join(result, part);
    }
  }
  return {result.H, result.b, result.cost};
}

}  // namespace

NormalEquations accumulate_factors(const Pose2D& X, const FactorSet& factors,
                                   const FactorWeights& weights) {
  return accumulate_impl<true>(X, factors, weights);
}

namespace serial {
NormalEquations accumulate_factors(const Pose2D& X, const FactorSet& factors,
                                   const FactorWeights& weights) {
  return accumulate_impl<false>(X, factors, weights);
}
}  // namespace serial

double factor_cost(const Pose2D& X, const FactorSet& factors,
                   const FactorWeights& weights) {
  return accumulate_factors(X, factors, weights).cost;
}

StepResult gauss_newton_step(const Pose2D& X, const FactorSet& factors,
                             const FactorWeights& weights, double lambda) {
  const NormalEquations ne = accumulate_factors(X, factors, weights);
  StepResult out;
  out.cost = ne.cost;
  if (!ne.H.allFinite() || !ne.b.allFinite() || ne.H.isZero(0.0)) {
    out.x_new = X;
    out.singular = true;
    return out;
  }
  const Eigen::Matrix3d A =
      ne.H + lambda * Eigen::Matrix3d::Identity();
  const Eigen::Vector3d dx = A.ldlt().solve(-ne.b);
  if (!dx.allFinite()) {
    out.x_new = X;
    out.singular = true;
    return out;
  }
  out.x_new = Pose2D(X.x + dx[0], X.y + dx[1], X.theta + dx[2]);
  return out;
}

OptimizeResult optimize(const Pose2D& X0, const FactorSet& factors,
                        const FactorWeights& weights, int n_iter,
                        double lambda0) {
  OptimizeResult res;
  res.x = X0;
  res.cost = factor_cost(X0, factors, weights);
  double lambda = lambda0;
  for (int it = 0; it < n_iter; ++it) {
    const StepResult step = gauss_newton_step(res.x, factors, weights, lambda);
    if (step.singular) {
      res.singular = true;
      break;
    }
    const double new_cost = factor_cost(step.x_new, factors, weights);
    if (new_cost <= res.cost) {
      res.x = step.x_new;
      res.cost = new_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
    } else {
      lambda = std::min(lambda * 10.0, 1e6);
    }
  }
  return res;
}

MatchResult match_scans(const ScanRecord& ref, const ScanRecord& cand,
                        const std::optional<Pose2D>& initial_guess,
                        const MatcherConfig& cfg) {
  if (!cand.has_distance_maps())
    throw InvalidParams("candidate record lacks distance maps");

  const auto& ref_feats = cfg.kind == FeatureKind::OrientedBinary
                              ? ref.features_global
                              : ref.features_edge;
  const auto& cand_feats = cfg.kind == FeatureKind::OrientedBinary
                               ? cand.features_global
                               : cand.features_edge;

  const std::vector<Correspondence> corr =
      match_features(ref_feats, cand_feats, cfg.ratio_max);
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pts;
  pts.reserve(corr.size());
  for (const Correspondence& m : corr)
    pts.emplace_back(feature_point(ref.grid, ref_feats[m.ref_idx]),
                     feature_point(cand.grid, cand_feats[m.cand_idx]));

  MatchResult result;
  const double res_m = cand.grid.resolution;

  Pose2D X;
  if (initial_guess) {
    X = *initial_guess;
    result.had_initial_guess = true;
  } else {
    const auto est = estimate_initial_transform(
        pts, cfg.inlier_tol_cells * res_m, cfg.min_inliers,
        cfg.consensus_iters, cfg.seed);
    if (!est) return result;  // no guess and no feature consensus
    X = est->pose;
  }

  std::vector<int32_t> active(corr.size());
  for (size_t i = 0; i < corr.size(); ++i) active[i] = static_cast<int32_t>(i);

  FactorSet fs;
  fs.wall_points = &ref.wall_points;
  fs.wall_dmap = &cand.wall_dmap;
  fs.curb_points = &ref.curb_points;
  fs.curb_dmap = &cand.curb_dmap;

  for (double delta : cfg.funnel) {
    fs.pairs.clear();
    for (int32_t i : active) fs.pairs.push_back({pts[i].first, pts[i].second});
    X = optimize(X, fs, cfg.weights, cfg.iters_per_stage, cfg.lambda0).x;

    std::vector<int32_t> next;
    next.reserve(active.size());
    for (int32_t i : active)
      if ((apply(X, pts[i].first) - pts[i].second).norm() <= delta)
        next.push_back(i);
    active = std::move(next);
  }

  result.iou = grid_iou(ref.grid, cand.grid, X);
  if (result.iou < cfg.iou_min) {
    FactorSet walls_only;
    walls_only.wall_points = &ref.wall_points;
    walls_only.wall_dmap = &cand.wall_dmap;
    X = optimize(X, walls_only, cfg.weights, cfg.fallback_iters, cfg.lambda0).x;
    result.iou = grid_iou(ref.grid, cand.grid, X);
    result.used_fallback = true;
  }

  fs.pairs.clear();
  for (int32_t i : active) fs.pairs.push_back({pts[i].first, pts[i].second});
  result.final_cost = factor_cost(X, fs, cfg.weights);
  result.X = X;
  for (int32_t i : active) result.surviving.push_back(corr[i]);

  // Inliers for the acceptance gate: correspondences that agree with the
  // final transform within the module-wide inlier tolerance (the funnel
  // thresholds prune optimization factors, not the agreement count).
  const double tol = cfg.inlier_tol_cells * res_m;
  int inliers = 0;
  for (const auto& [r, c] : pts)
    inliers += (apply(X, r) - c).norm() < tol;
  result.inliers = inliers;
  result.success =
      result.iou >= cfg.iou_min && result.inliers >= cfg.min_inliers;
  return result;
}

}  // namespace topoloc
