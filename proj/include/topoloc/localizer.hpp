#pragma once

#include <cstdint>
#include <optional>

#include "topoloc/scan_matcher.hpp"
#include "topoloc/topo_map.hpp"

namespace topoloc {

struct LocalizerConfig {
  double overlap_min = 0.4;      // branch-1/3 scan overlap gate
  double jump_threshold = 3.0;   // max found-vs-guess distance, branch 2
  double fallback_radius = 5.0;  // "inside location" and branch-4 bound
  int top_k = 5;
  double sr_threshold = 10.0;    // evaluation only
};

struct LocalizerState {
  int32_t v_cur = -1;
  Pose2D T_cur;  // robot pose in v_cur's frame
  bool lost = false;
  int64_t t = 0;
};

// Per-step diagnostics; the acceptance harness checks the state-machine
// invariants on these.
struct StepTrace {
  int branch = 0;
  bool switched = false;
  bool lost = false;
  int32_t v_cur = -1;
  double overlap = 0.0;
  double jump_dist = 0.0;  // branch-2 accepts: ||found - guess||
  bool match_success = false;
};

// Four-branch tracking state machine over the graph of locations:
//   1. still inside v_cur with enough scan overlap -> apply odometry;
//   2. else try neighbors along edges (scan matching, dead-reckoned pose
//      in the neighbor frame as the initial guess, jump-threshold gate);
//   3. else global localization (place recognition + scan matching);
//   4. else hop to the nearest neighbor by guessed pose if within
//      fallback_radius, otherwise dead-reckon and mark lost.
// Lost clears only on a successful branch-2/3 match. The global pose
// estimate compose(pose of v_cur, T_cur) is defined at every step.
class Localizer {
 public:
  Localizer(const TopoMap& map, const PlaceEncoder& encoder,
            const LocalizerConfig& cfg, const GridConfig& grid_cfg,
            const CurbParams& curb_cfg, const FeatureConfig& feat_cfg,
            const MatcherConfig& matcher_cfg, uint64_t seed = 0);

  void initialize(int32_t v0, const Pose2D& T0);
  // Starts at the location nearest to a known global pose.
  void initialize_from_pose(const Pose2D& global_pose);

  Pose2D step(const PointCloud& cloud, const Pose2D& odom,
              StepTrace* trace = nullptr);

  // Place recognition + per-candidate scan matching; the successful match
  // with the highest IOU, if any.
  std::optional<std::pair<int32_t, MatchResult>> global_localize(
      const ScanRecord& rec, int64_t frame_index) const;

  const LocalizerState& state() const { return state_; }
  Pose2D global_pose() const;

 private:
  const TopoMap& map_;
  const PlaceEncoder& encoder_;
  LocalizerConfig cfg_;
  GridConfig grid_cfg_;
  CurbParams curb_cfg_;
  FeatureConfig feat_cfg_;
  MatcherConfig matcher_cfg_;
  uint64_t seed_;
  std::vector<PlaceDescriptor> descriptors_;
  LocalizerState state_;
  bool initialized_ = false;
};

}  // namespace topoloc
