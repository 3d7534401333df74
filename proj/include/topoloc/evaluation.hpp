#pragma once

#include <utility>
#include <vector>

#include "topoloc/pose2.hpp"

namespace topoloc {

struct TrajectoryPair {
  std::vector<double> timestamps;
  std::vector<Pose2D> estimated;
  std::vector<Pose2D> ground_truth;
};

// Per-step Euclidean translation error (orientation excluded).
std::vector<double> ate_errors(const TrajectoryPair& tp);

// (mean, median); even-count median averages the two middle values.
std::pair<double, double> ate_stats(const std::vector<double>& errors);

// Fraction of steps with error strictly below the threshold.
double sr_loc(const std::vector<double>& errors, double threshold);

// Nearest-timestamp association; estimate steps without a ground-truth
// stamp within max_gap are dropped.
TrajectoryPair associate_by_timestamp(const std::vector<double>& est_ts,
                                      const std::vector<Pose2D>& est,
                                      const std::vector<double>& gt_ts,
                                      const std::vector<Pose2D>& gt,
                                      double max_gap = 0.1);

}  // namespace topoloc
