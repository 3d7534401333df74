#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "topoloc/rng.hpp"
#include "topoloc/scan_matcher.hpp"

#include "oracles.hpp"
#include "sim_fixtures.hpp"

using namespace topoloc;

namespace {

// Random factor configuration whose distance-map points land strictly
// inside interpolation cells, where the objective is differentiable.
struct RandomProblem {
  OccupancyGrid wall_grid, curb_grid;
  DistanceMap wall_dmap, curb_dmap;
  std::vector<Eigen::Vector2d> wall_points, curb_points;
  FactorSet factors;
  Pose2D X;

  RandomProblem(const RandomProblem&) = delete;
  explicit RandomProblem(uint64_t seed) {
    Rng rng(seed);
    wall_grid = oracles::random_grid(seed * 3 + 1, 60, 60, 0.2, 0.06, 0.0);
    curb_grid = oracles::random_grid(seed * 3 + 2, 60, 60, 0.2, 0.0, 0.05);
    wall_dmap = distance_transform(wall_grid, CellClass::Wall, 5.0);
    curb_dmap = distance_transform(curb_grid, CellClass::Curb, 5.0);
    X = Pose2D(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
               rng.uniform(-0.3, 0.3));

    auto safe_point = [&](const DistanceMap& dmap) {
      for (;;) {
        const Eigen::Vector2d p(rng.uniform(-4.5, 4.5),
                                rng.uniform(-4.5, 4.5));
        const Eigen::Vector2d t = apply(X, p);
        const Eigen::Vector2d g = apply(inverse(dmap.origin), t);
        const double gx = g.x() / dmap.resolution - 0.5;
        const double gy = g.y() / dmap.resolution - 0.5;
        const double fx = gx - std::floor(gx), fy = gy - std::floor(gy);
        const double margin = 1e-3;
        if (fx > margin && fx < 1 - margin && fy > margin && fy < 1 - margin &&
            gx > 1 && gy > 1 && gx < dmap.width - 2 && gy < dmap.height - 2)
          return p;
      }
    };
    for (int i = 0; i < 60; ++i) wall_points.push_back(safe_point(wall_dmap));
    for (int i = 0; i < 40; ++i) curb_points.push_back(safe_point(curb_dmap));
    for (int i = 0; i < 30; ++i) {
      const Eigen::Vector2d r(rng.uniform(-5, 5), rng.uniform(-5, 5));
      const Eigen::Vector2d c =
          apply(X, r) + Eigen::Vector2d(rng.uniform(-0.3, 0.3),
                                        rng.uniform(-0.3, 0.3));
      factors.pairs.push_back({r, c});
    }
    factors.wall_points = &wall_points;
    factors.wall_dmap = &wall_dmap;
    factors.curb_points = &curb_points;
    factors.curb_dmap = &curb_dmap;
  }
};

}  // namespace

TEST_CASE("zero residuals: step keeps X, cost is zero") {
  FactorSet fs;
  for (int i = 0; i < 5; ++i) {
    const Eigen::Vector2d p(i * 0.5, 1.0 - i * 0.2);
    fs.pairs.push_back({p, p});
  }
  const StepResult step = gauss_newton_step(Pose2D::identity(), fs, {});
  CHECK(step.cost == doctest::Approx(0.0));
  CHECK(!step.singular);
  CHECK(std::abs(step.x_new.x) < 1e-9);
  CHECK(std::abs(step.x_new.y) < 1e-9);
  CHECK(std::abs(step.x_new.theta) < 1e-9);
}

TEST_CASE("single pair: one step solves the linear translation") {
  FactorSet fs;
  fs.pairs.push_back({{0.0, 0.0}, {0.5, 0.0}});
  const StepResult step = gauss_newton_step(Pose2D::identity(), fs, {});
  CHECK(!step.singular);
  CHECK(step.x_new.x == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(std::abs(step.x_new.y) < 1e-9);
  CHECK(std::abs(step.x_new.theta) < 1e-9);
}

TEST_CASE("empty factor set is singular") {
  const StepResult step = gauss_newton_step(Pose2D(1, 2, 0.3), FactorSet{}, {});
  CHECK(step.singular);
  CHECK(step.x_new.x == doctest::Approx(1.0));
}

TEST_CASE("analytic gradient matches central finite differences") {
  const FactorWeights weights;
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    const RandomProblem prob(seed);
    const NormalEquations ne =
        accumulate_factors(prob.X, prob.factors, weights);
    const Eigen::Vector3d analytic = 2.0 * ne.b;  // d cost / dX

    Eigen::Vector3d fd;
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Pose2D lo = prob.X, hi = prob.X;
      (k == 0 ? hi.x : k == 1 ? hi.y : hi.theta) += h;
      (k == 0 ? lo.x : k == 1 ? lo.y : lo.theta) -= h;
      fd[k] = (factor_cost(hi, prob.factors, weights) -
               factor_cost(lo, prob.factors, weights)) /
              (2.0 * h);
    }
    const double rel =
        (fd - analytic).norm() / std::max(1.0, fd.norm());
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("damped iteration never increases the cost") {
  const FactorWeights weights;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const RandomProblem prob(seed + 500);
    Pose2D X = prob.X;
    double lambda = 1e-6;
    double cost = factor_cost(X, prob.factors, weights);
    for (int it = 0; it < 15; ++it) {
      const StepResult step =
          gauss_newton_step(X, prob.factors, weights, lambda);
      REQUIRE(!step.singular);
      const double new_cost = factor_cost(step.x_new, prob.factors, weights);
      if (new_cost <= cost) {
        X = step.x_new;
        CHECK(new_cost <= cost + 1e-9);
        cost = new_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
      } else {
        lambda = std::min(lambda * 10.0, 1e6);
      }
    }
    const OptimizeResult res =
        optimize(prob.X, prob.factors, weights, 15, 1e-6);
    CHECK(res.cost <=
          factor_cost(prob.X, prob.factors, weights) + 1e-9);
  }
}

TEST_CASE("match_scans: self match is exact") {
  const World world = fixtures::city_world();
  const ScanRecord rec = fixtures::make_record(world, {90, 60, 0.2}, 1, true);
  const MatchResult r =
      match_scans(rec, rec, Pose2D::identity(), MatcherConfig{});
  CHECK(r.success);
  CHECK(r.iou == doctest::Approx(1.0));
  CHECK(std::abs(r.X.x) < 0.01);
  CHECK(std::abs(r.X.y) < 0.01);
  CHECK(std::abs(r.X.theta) < 0.1 * M_PI / 180.0);
}

TEST_CASE("match_scans recovers planted transforms without a guess") {
  const World world = fixtures::city_world();
  Rng rng(99);
  const Pose2D bases[] = {
      {90, 60, 0.0}, {30, 120, 1.0}, {120, 30, -0.7}, {60, 90, 2.2}};
  int ok = 0, total = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const Pose2D base = bases[trial % 4];
    const Pose2D delta(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                       rng.uniform(-0.4, 0.4));
    const ScanRecord cand =
        fixtures::make_record(world, base, 10 + trial, true);
    const ScanRecord ref =
        fixtures::make_record(world, compose(base, delta), 200 + trial, false);
    const MatchResult r = match_scans(ref, cand, std::nullopt, MatcherConfig{});
    ++total;
    if (!r.success) continue;
    if (translation_distance(r.X, delta) < 0.1 &&
        std::abs(normalize_angle(r.X.theta - delta.theta)) <
            1.0 * M_PI / 180.0)
      ++ok;

    // Funnel contract: every surviving pair sits within the last threshold.
    const auto& rf = ref.features_global;
    const auto& cf = cand.features_global;
    for (const Correspondence& m : r.surviving) {
      const Eigen::Vector2d rp = feature_point(ref.grid, rf[m.ref_idx]);
      const Eigen::Vector2d cp = feature_point(cand.grid, cf[m.cand_idx]);
      CHECK((apply(r.X, rp) - cp).norm() <= 0.1 + 1e-9);
    }
  }
  CHECK(ok >= total - 1);
}

TEST_CASE("match_scans fails on disjoint scenes") {
  const World world = fixtures::city_world();
  const ScanRecord a = fixtures::make_record(world, {30, 0, 0.0}, 3, true);
  const ScanRecord b =
      fixtures::make_record(world, {150, 120, 1.2}, 4, false);
  const MatchResult r = match_scans(b, a, std::nullopt, MatcherConfig{});
  CHECK(!r.success);
}

TEST_CASE("forward and reverse matches compose to identity") {
  const World world = fixtures::city_world();
  const Pose2D pa(90, 60, 0.1), pb(92, 61, 0.3);
  const ScanRecord ra = fixtures::make_record(world, pa, 5, true);
  const ScanRecord rb = fixtures::make_record(world, pb, 6, true);
  const MatchResult fwd = match_scans(rb, ra, std::nullopt, MatcherConfig{});
  const MatchResult rev = match_scans(ra, rb, std::nullopt, MatcherConfig{});
  REQUIRE(fwd.success);
  REQUIRE(rev.success);
  const Pose2D round = compose(fwd.X, rev.X);
  CHECK(round.translation().norm() < 0.1);
  CHECK(std::abs(round.theta) < 1.0 * M_PI / 180.0);
}

TEST_CASE("feature-only matching equals the Procrustes fit") {
  // Perfect correspondences: candidate features and grid are the exact
  // transformed copies of the reference ones.
  const Pose2D truth(0.8, -0.5, 0.15);
  Rng rng(7);

  ScanRecord ref, cand;
  ref.grid = OccupancyGrid::centered(40.0, 0.2);
  cand.grid = OccupancyGrid::centered(40.0, 0.2);
  for (int i = 0; i < 300; ++i) {
    const Eigen::Vector2d p(rng.uniform(-12, 12), rng.uniform(-12, 12));
    int32_t ix, iy;
    ref.grid.cell_index(p, ix, iy);
    if (ref.grid.inside(ix, iy)) ref.grid.set(ix, iy, CellClass::Wall);
    const Eigen::Vector2d q = apply(truth, ref.grid.cell_center(ix, iy));
    cand.grid.cell_index(q, ix, iy);
    if (cand.grid.inside(ix, iy)) cand.grid.set(ix, iy, CellClass::Wall);
  }
  ref.wall_points = ref.grid.cell_centers(CellClass::Wall);
  cand.wall_points = cand.grid.cell_centers(CellClass::Wall);
  build_distance_maps(cand, 5.0);

  auto cells_of = [](const OccupancyGrid& g, const Eigen::Vector2d& scan_pt) {
    const Eigen::Vector2d gp = apply(inverse(g.origin), scan_pt);
    return Eigen::Vector2f(
        static_cast<float>(gp.x() / g.resolution - 0.5),
        static_cast<float>(gp.y() / g.resolution - 0.5));
  };
  for (int i = 0; i < 40; ++i) {
    const Eigen::Vector2d p(rng.uniform(-10, 10), rng.uniform(-10, 10));
    Feature fr, fc;
    fr.kind = fc.kind = FeatureKind::OrientedBinary;
    fr.desc.resize(32);
    for (auto& b : fr.desc) b = static_cast<uint8_t>(rng.next_u64() & 0xff);
    fc.desc = fr.desc;
    fr.pos = cells_of(ref.grid, p);
    fc.pos = cells_of(cand.grid, apply(truth, p));
    fr.response = fc.response = 1.0f;
    ref.features_global.push_back(fr);
    cand.features_global.push_back(fc);
  }

  MatcherConfig cfg;
  cfg.weights = {1.0, 0.0, 0.0};
  const MatchResult r = match_scans(ref, cand, std::nullopt, cfg);
  REQUIRE(r.success);

  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs;
  for (const Correspondence& m : r.surviving)
    pairs.emplace_back(
        feature_point(ref.grid, ref.features_global[m.ref_idx]),
        feature_point(cand.grid, cand.features_global[m.cand_idx]));
  const Pose2D closed_form = procrustes2d(pairs);
  CHECK(std::abs(r.X.x - closed_form.x) < 1e-6);
  CHECK(std::abs(r.X.y - closed_form.y) < 1e-6);
  CHECK(std::abs(normalize_angle(r.X.theta - closed_form.theta)) < 1e-6);
}

TEST_CASE("no guess and no consensus fails cleanly") {
  ScanRecord ref, cand;
  ref.grid = OccupancyGrid::centered(10.0, 0.2);
  cand.grid = OccupancyGrid::centered(10.0, 0.2);
  build_distance_maps(cand, 5.0);
  const MatchResult r = match_scans(ref, cand, std::nullopt, MatcherConfig{});
  CHECK(!r.success);
  CHECK(r.inliers == 0);
}
