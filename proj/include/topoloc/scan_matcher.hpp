#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "topoloc/distance_map.hpp"
#include "topoloc/grid_builder.hpp"
#include "topoloc/pose2.hpp"

namespace topoloc {

// Information weights of the three factor types: feature point-to-point,
// wall point-to-distance-map, curb point-to-distance-map.
struct FactorWeights {
  double omega_f = 1.0;
  double omega_w = 0.5;
  double omega_c = 1.0;
};

struct PointPair {
  Eigen::Vector2d r, c;  // reference-frame point, candidate-frame point
};

// One optimization problem: X maps reference-frame points into the
// candidate frame; distance maps belong to the candidate scan.
struct FactorSet {
  std::vector<PointPair> pairs;
  const std::vector<Eigen::Vector2d>* wall_points = nullptr;
  const DistanceMap* wall_dmap = nullptr;
  const std::vector<Eigen::Vector2d>* curb_points = nullptr;
  const DistanceMap* curb_dmap = nullptr;
};

struct NormalEquations {
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double cost = 0.0;
};

// Weighted Gauss-Newton normal equations of the combined objective
// sum_i omega ||r_i||^2 at X. Point-to-point residual tau(X,r)-c;
// point-to-distance-map residual D(tau(X,p)) with the exact gradient of
// the bilinearly interpolated field. Points outside the map contribute
// nothing. OpenMP chunked reduction, bit-exact with the serial reference.
NormalEquations accumulate_factors(const Pose2D& X, const FactorSet& factors,
                                   const FactorWeights& weights);
namespace serial {
NormalEquations accumulate_factors(const Pose2D& X, const FactorSet& factors,
                                   const FactorWeights& weights);
}

double factor_cost(const Pose2D& X, const FactorSet& factors,
                   const FactorWeights& weights);

struct StepResult {
  Pose2D x_new;
  double cost = 0.0;  // cost at the input X
  bool singular = false;
};

// One damped Gauss-Newton update: solve (H + lambda I) dx = -b.
StepResult gauss_newton_step(const Pose2D& X, const FactorSet& factors,
                             const FactorWeights& weights,
                             double lambda = 1e-6);

struct OptimizeResult {
  Pose2D x;
  double cost = 0.0;
  bool singular = false;
};

// Damped iteration: lambda /= 10 on accepted (non-increasing cost) steps,
// lambda *= 10 on rejected ones. Cost is monotone non-increasing.
OptimizeResult optimize(const Pose2D& X0, const FactorSet& factors,
                        const FactorWeights& weights, int n_iter,
                        double lambda0 = 1e-6);

struct MatcherConfig {
  std::vector<double> funnel = {15.0, 7.0, 1.0, 0.1};  // meters
  int iters_per_stage = 10;
  int fallback_iters = 20;
  double iou_min = 0.4;
  int min_inliers = 5;
  double lambda0 = 1e-6;
  FactorWeights weights;
  double ratio_max = 0.8;
  double inlier_tol_cells = 3.0;
  int consensus_iters = 200;
  uint64_t seed = 0;
  FeatureKind kind = FeatureKind::OrientedBinary;
};

struct MatchResult {
  Pose2D X;  // transform taking ref-frame coordinates to cand frame
  bool success = false;
  double iou = 0.0;
  int inliers = 0;
  double final_cost = 0.0;
  bool used_fallback = false;
  bool had_initial_guess = false;
  std::vector<Correspondence> surviving;
};

// Algorithm: seed X from the initial guess or feature consensus, then for
// each funnel threshold run damped Gauss-Newton on all three factors and
// drop feature pairs whose residual exceeds the threshold (meters);
// finally, if the transformed-grid IOU is below iou_min, rerun on the wall
// factor alone. success = IOU >= iou_min and surviving pairs >= min_inliers.
MatchResult match_scans(const ScanRecord& ref, const ScanRecord& cand,
                        const std::optional<Pose2D>& initial_guess,
                        const MatcherConfig& cfg);

}  // namespace topoloc
