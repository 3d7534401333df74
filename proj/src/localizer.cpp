#include "topoloc/localizer.hpp"

#include <cmath>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"
#include "topoloc/rng.hpp"

namespace topoloc {

Localizer::Localizer(const TopoMap& map, const PlaceEncoder& encoder,
                     const LocalizerConfig& cfg, const GridConfig& grid_cfg,
                     const CurbParams& curb_cfg, const FeatureConfig& feat_cfg,
                     const MatcherConfig& matcher_cfg, uint64_t seed)
    : map_(map),
      encoder_(encoder),
      cfg_(cfg),
      grid_cfg_(grid_cfg),
      curb_cfg_(curb_cfg),
      feat_cfg_(feat_cfg),
      matcher_cfg_(matcher_cfg),
      seed_(seed),
      descriptors_(map.descriptor_index()) {}

void Localizer::initialize(int32_t v0, const Pose2D& T0) {
  if (v0 < 0 || static_cast<size_t>(v0) >= map_.locations.size())
    throw UnknownLocation("initial location " + std::to_string(v0));
  state_.v_cur = v0;
  state_.T_cur = T0;
  state_.lost = false;
  state_.t = 0;
  initialized_ = true;
}

void Localizer::initialize_from_pose(const Pose2D& global_pose) {
  const int32_t v0 = map_.nearest_location(global_pose);
  if (v0 < 0) throw UnknownLocation("empty map");
  initialize(v0, between(map_.locations[v0].pose, global_pose));
}

Pose2D Localizer::global_pose() const {
  if (!initialized_) throw UninitializedState("localizer not initialized");
  return compose(map_.locations[state_.v_cur].pose, state_.T_cur);
}

std::optional<std::pair<int32_t, MatchResult>> Localizer::global_localize(
    const ScanRecord& rec, int64_t frame_index) const {
  if (map_.locations.empty()) return std::nullopt;
  PlaceDescriptor q;
  try {
    q = encoder_.encode(rec, frame_index);
  } catch (const EmptyScan&) {
    return std::nullopt;
  }
  const auto ranked = retrieve_top_k(q, descriptors_, cfg_.top_k);

  std::vector<MatchResult> results(ranked.size());
  MatcherConfig mc = matcher_cfg_;
  mc.kind = FeatureKind::OrientedBinary;
  parallel_for(static_cast<int64_t>(ranked.size()), [&](int64_t k) {
    const Location& cand = map_.locations[ranked[k].first];
    MatcherConfig local = mc;
    local.seed = mix64(mc.seed, 0x91000000ULL + static_cast<uint64_t>(k));
    results[k] = match_scans(rec, cand.rec, std::nullopt, local);
  });

  int best = -1;
  for (size_t k = 0; k < results.size(); ++k) {
    if (!results[k].success || results[k].iou < cfg_.overlap_min) continue;
    if (best < 0 || results[k].iou > results[best].iou)
      best = static_cast<int>(k);
  }
  if (best < 0) return std::nullopt;
  return std::make_pair(ranked[best].first, results[best]);
}

Pose2D Localizer::step(const PointCloud& cloud, const Pose2D& odom,
                       StepTrace* trace) {
  if (!initialized_) throw UninitializedState("localizer not initialized");

  const Pose2D dead_reckoned = compose(state_.T_cur, odom);
  const uint64_t step_seed = mix64(seed_, 0x57E00000ULL + state_.t);

  RecordOptions opts;
  opts.with_distance_maps = false;
  const ScanRecord query =
      build_scan_record(cloud, grid_cfg_, curb_cfg_, feat_cfg_, opts,
                        step_seed);

  StepTrace local_trace;
  StepTrace& tr = trace ? *trace : local_trace;
  tr = StepTrace{};

  const Location& cur = map_.locations[state_.v_cur];
  bool resolved = false;

  // Branch 1: still inside the current location with enough overlap.
  const double overlap =
      grid_iou(query.grid, cur.rec.grid, dead_reckoned);
  tr.overlap = overlap;
  if (dead_reckoned.translation().norm() < cfg_.fallback_radius &&
      overlap >= cfg_.overlap_min) {
    state_.T_cur = dead_reckoned;
    tr.branch = 1;
    resolved = true;
  }

  // Branch 2: move along an edge, guess = dead-reckoned pose expressed in
  // the neighbor frame, accept within the jumping threshold.
  if (!resolved) {
    const auto& nbrs = map_.neighbors(state_.v_cur);
    MatcherConfig mc = matcher_cfg_;
    mc.kind = FeatureKind::CornerScore;
    std::vector<MatchResult> results(nbrs.size());
    std::vector<Pose2D> guesses(nbrs.size());
    parallel_for(static_cast<int64_t>(nbrs.size()), [&](int64_t k) {
      const auto& [vn, rel] = nbrs[k];
      guesses[k] = compose(inverse(rel), dead_reckoned);
      MatcherConfig local = mc;
      local.seed = mix64(step_seed, 0xED6E0000ULL + static_cast<uint64_t>(k));
      results[k] = match_scans(query, map_.locations[vn].rec, guesses[k],
                               local);
    });
    int best = -1;
    double best_jump = 0.0;
    for (size_t k = 0; k < nbrs.size(); ++k) {
      if (!results[k].success) continue;
      const double jump =
          (results[k].X.translation() - guesses[k].translation()).norm();
      if (jump > cfg_.jump_threshold) continue;
      if (best < 0 || results[k].iou > results[best].iou) {
        best = static_cast<int>(k);
        best_jump = jump;
      }
    }
    if (best >= 0) {
      state_.v_cur = nbrs[best].first;
      state_.T_cur = results[best].X;
      state_.lost = false;
      tr.branch = 2;
      tr.switched = true;
      tr.jump_dist = best_jump;
      tr.match_success = true;
      resolved = true;
    }
  }

  // Branch 3: global localization.
  if (!resolved) {
    const auto found = global_localize(query, state_.t);
    if (found) {
      state_.v_cur = found->first;
      state_.T_cur = found->second.X;
      state_.lost = false;
      tr.branch = 3;
      tr.switched = true;
      tr.match_success = true;
      resolved = true;
    }
  }

  // Branch 4: hop to the nearest neighbor by guessed pose, else
  // dead-reckon and flag lost.
  if (!resolved) {
    const auto& nbrs = map_.neighbors(state_.v_cur);
    int best = -1;
    double best_norm = std::numeric_limits<double>::infinity();
    Pose2D best_guess;
    for (size_t k = 0; k < nbrs.size(); ++k) {
      const Pose2D guess = compose(inverse(nbrs[k].second), dead_reckoned);
      const double nrm = guess.translation().norm();
      if (nrm < best_norm) {
        best_norm = nrm;
        best = static_cast<int>(k);
        best_guess = guess;
      }
    }
    tr.branch = 4;
    if (best >= 0 && best_norm < cfg_.fallback_radius) {
      state_.v_cur = nbrs[best].first;
      state_.T_cur = best_guess;
      tr.switched = true;
    } else {
      state_.T_cur = dead_reckoned;
      state_.lost = true;
    }
  }

  ++state_.t;
  tr.lost = state_.lost;
  tr.v_cur = state_.v_cur;
  return global_pose();
}

}  // namespace topoloc
