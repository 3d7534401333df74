#include "topoloc/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "topoloc/errors.hpp"

namespace topoloc {

std::vector<double> ate_errors(const TrajectoryPair& tp) {
  if (tp.estimated.size() != tp.ground_truth.size())
    throw LengthMismatch("estimated vs ground truth");
  if (tp.estimated.empty()) throw Empty("empty trajectory pair");
  std::vector<double> errors(tp.estimated.size());
  for (size_t t = 0; t < errors.size(); ++t)
    errors[t] = translation_distance(tp.estimated[t], tp.ground_truth[t]);
  return errors;
}

std::pair<double, double> ate_stats(const std::vector<double>& errors) {
  if (errors.empty()) throw Empty("no errors");
  double sum = 0.0;
  for (double e : errors) sum += e;
  const double mean = sum / static_cast<double>(errors.size());

  std::vector<double> sorted(errors);
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double median = n % 2 == 1
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return {mean, median};
}

double sr_loc(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) throw Empty("no errors");
  if (threshold <= 0.0) throw InvalidParams("threshold must be positive");
  size_t ok = 0;
  for (double e : errors) ok += e < threshold;
  return static_cast<double>(ok) / static_cast<double>(errors.size());
}

TrajectoryPair associate_by_timestamp(const std::vector<double>& est_ts,
                                      const std::vector<Pose2D>& est,
                                      const std::vector<double>& gt_ts,
                                      const std::vector<Pose2D>& gt,
                                      double max_gap) {
  if (est_ts.size() != est.size() || gt_ts.size() != gt.size())
    throw LengthMismatch("timestamps vs poses");
  TrajectoryPair tp;
  for (size_t i = 0; i < est_ts.size(); ++i) {
    const auto it =
        std::lower_bound(gt_ts.begin(), gt_ts.end(), est_ts[i]);
    size_t j = static_cast<size_t>(it - gt_ts.begin());
    if (j == gt_ts.size()) j = gt_ts.size() - 1;
    if (j > 0 &&
        std::abs(gt_ts[j - 1] - est_ts[i]) < std::abs(gt_ts[j] - est_ts[i]))
      --j;
    if (std::abs(gt_ts[j] - est_ts[i]) > max_gap) continue;
    tp.timestamps.push_back(est_ts[i]);
    tp.estimated.push_back(est[i]);
    tp.ground_truth.push_back(gt[j]);
  }
  return tp;
}

}  // namespace topoloc
