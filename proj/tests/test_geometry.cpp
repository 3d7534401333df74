#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "topoloc/distance_map.hpp"
#include "topoloc/grid.hpp"
#include "topoloc/pose2.hpp"
#include "topoloc/rng.hpp"

#include "oracles.hpp"

using namespace topoloc;

namespace {

Pose2D random_pose(Rng& rng, double span = 10.0) {
  return {rng.uniform(-span, span), rng.uniform(-span, span),
          rng.uniform(-M_PI, M_PI)};
}

}  // namespace

TEST_CASE("compose identity and quarter turn") {
  const Pose2D b(2.0, -1.0, 0.7);
  const Pose2D r = compose(Pose2D::identity(), b);
  CHECK(r.x == doctest::Approx(b.x).epsilon(1e-12));
  CHECK(r.y == doctest::Approx(b.y).epsilon(1e-12));
  CHECK(r.theta == doctest::Approx(b.theta).epsilon(1e-12));

  const Pose2D q = compose(Pose2D(1, 0, M_PI / 2), Pose2D(1, 0, 0));
  CHECK(q.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.theta == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("compose matches homogeneous matrix product") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Pose2D a = random_pose(rng), b = random_pose(rng);
    const Pose2D c = compose(a, b);
    const Eigen::Matrix3d m = oracles::pose_matrix(a) * oracles::pose_matrix(b);
    CHECK(std::abs(c.x - m(0, 2)) < 1e-9);
    CHECK(std::abs(c.y - m(1, 2)) < 1e-9);
    CHECK(std::abs(normalize_angle(c.theta - std::atan2(m(1, 0), m(0, 0)))) <
          1e-9);
  }
}

TEST_CASE("compose is associative and inverse is two-sided") {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Pose2D a = random_pose(rng), b = random_pose(rng),
                 c = random_pose(rng);
    const Pose2D lhs = compose(compose(a, b), c);
    const Pose2D rhs = compose(a, compose(b, c));
    CHECK(std::abs(lhs.x - rhs.x) < 1e-9);
    CHECK(std::abs(lhs.y - rhs.y) < 1e-9);
    CHECK(std::abs(normalize_angle(lhs.theta - rhs.theta)) < 1e-9);

    for (const Pose2D p : {compose(a, inverse(a)), compose(inverse(a), a)}) {
      CHECK(std::abs(p.x) < 1e-9);
      CHECK(std::abs(p.y) < 1e-9);
      CHECK(std::abs(p.theta) < 1e-9);
    }
  }
}

TEST_CASE("theta always normalized to (-pi, pi]") {
  CHECK(Pose2D(0, 0, 3 * M_PI).theta == doctest::Approx(M_PI));
  CHECK(Pose2D(0, 0, -M_PI).theta == doctest::Approx(M_PI));
  CHECK(Pose2D(0, 0, 2 * M_PI).theta == doctest::Approx(0.0));
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform(-50.0, 50.0);
    const double n = normalize_angle(t);
    CHECK(n > -M_PI);
    CHECK(n <= M_PI);
    CHECK(std::abs(std::sin(n) - std::sin(t)) < 1e-9);
    CHECK(std::abs(std::cos(n) - std::cos(t)) < 1e-9);
  }
}

TEST_CASE("apply identity, half turn, and matrix oracle") {
  const Eigen::Vector2d p = apply(Pose2D::identity(), {3.0, 4.0});
  CHECK(p.x() == doctest::Approx(3.0));
  CHECK(p.y() == doctest::Approx(4.0));

  const Eigen::Vector2d q = apply(Pose2D(0, 0, M_PI), {1.0, 0.0});
  CHECK(q.x() == doctest::Approx(-1.0));
  CHECK(std::abs(q.y()) < 1e-12);

  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    const Pose2D a = random_pose(rng);
    const Eigen::Vector2d pt(rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Eigen::Vector3d h =
        oracles::pose_matrix(a) * Eigen::Vector3d(pt.x(), pt.y(), 1.0);
    const Eigen::Vector2d r = apply(a, pt);
    CHECK(std::abs(r.x() - h.x()) < 1e-9);
    CHECK(std::abs(r.y() - h.y()) < 1e-9);
  }
}

TEST_CASE("distance transform: single source cell") {
  OccupancyGrid grid(11, 11, 0.1, Pose2D(0, 0, 0));
  grid.set(5, 5, CellClass::Wall);
  const DistanceMap dm = distance_transform(grid, CellClass::Wall, 10.0);
  CHECK(!dm.no_source);
  CHECK(dm.at(5, 5) == doctest::Approx(0.0));
  CHECK(dm.at(0, 0) == doctest::Approx(0.1 * std::sqrt(50.0)).epsilon(1e-6));
  CHECK(dm.at(5, 0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("distance transform: no source cells") {
  OccupancyGrid grid(8, 8, 0.2, Pose2D(0, 0, 0));
  grid.set(1, 1, CellClass::Wall);
  const DistanceMap dm = distance_transform(grid, CellClass::Curb, 5.0);
  CHECK(dm.no_source);
  for (float d : dm.d) CHECK(d == doctest::Approx(5.0));
  for (const auto& g : dm.grad) CHECK(g.norm() == doctest::Approx(0.0));
}

TEST_CASE("distance transform equals brute force on random grids") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const OccupancyGrid grid =
        oracles::random_grid(100 + seed, 50, 50, 0.2, 0.08, 0.04);
    for (CellClass cls : {CellClass::Wall, CellClass::Curb}) {
      const DistanceMap dm = distance_transform(grid, cls, 5.0);
      const std::vector<double> ref =
          oracles::brute_force_distance(grid, cls, 5.0);
      for (size_t i = 0; i < ref.size(); ++i)
        CHECK(std::abs(dm.d[i] - ref[i]) < 1e-6);
    }
  }
}

TEST_CASE("distance field is 1-Lipschitz across neighbors") {
  const OccupancyGrid grid = oracles::random_grid(55, 60, 60, 0.2, 0.05, 0.0);
  const DistanceMap dm = distance_transform(grid, CellClass::Wall, 5.0);
  // d is stored as float32, so allow float-level slack on the bound.
  const double bound = grid.resolution * std::sqrt(2.0) + 1e-6;
  for (int iy = 1; iy < grid.height - 1; ++iy) {
    for (int ix = 1; ix < grid.width - 1; ++ix) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          CHECK(std::abs(dm.at(ix, iy) - dm.at(ix + dx, iy + dy)) <= bound);
      // Gradient magnitude bound away from the truncation plateau.
      if (dm.at(ix, iy) < 5.0 - 2 * grid.resolution) {
        bool near_plateau = false;
        for (int dy = -1; dy <= 1 && !near_plateau; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (dm.at(ix + dx, iy + dy) >= 5.0) near_plateau = true;
        if (!near_plateau) {
          const auto g = dm.grad[static_cast<size_t>(iy) * grid.width + ix];
          CHECK(g.norm() <= 1.05);
        }
      }
    }
  }
}

TEST_CASE("bilinear sample matches cell centers and stays inside") {
  OccupancyGrid grid(20, 20, 0.2, Pose2D(-2, -2, 0));
  grid.set(10, 10, CellClass::Wall);
  const DistanceMap dm = distance_transform(grid, CellClass::Wall, 5.0);
  double v;
  Eigen::Vector2d g;
  REQUIRE(dm.sample(grid.cell_center(4, 7), v, g));
  CHECK(v == doctest::Approx(dm.at(4, 7)).epsilon(1e-6));
  CHECK_FALSE(dm.sample({100.0, 100.0}, v, g));
}

TEST_CASE("grid_iou: self, disjoint, shifted, symmetry") {
  OccupancyGrid g = oracles::random_grid(77, 40, 40, 0.2, 0.1, 0.05);
  CHECK(grid_iou(g, g, Pose2D::identity()) == doctest::Approx(1.0));

  OccupancyGrid a(20, 20, 0.2, Pose2D(-2, -2, 0));
  OccupancyGrid b = a;
  a.set(2, 2, CellClass::Wall);
  b.set(15, 15, CellClass::Wall);
  CHECK(grid_iou(a, b, Pose2D::identity()) == doctest::Approx(0.0));

  OccupancyGrid empty1(10, 10, 0.2, Pose2D(-1, -1, 0));
  CHECK(grid_iou(empty1, empty1, Pose2D::identity()) == doctest::Approx(0.0));

  Rng rng(88);
  for (int i = 0; i < 10; ++i) {
    const OccupancyGrid r =
        oracles::random_grid(200 + i, 40, 40, 0.2, 0.12, 0.02);
    const int kx = static_cast<int>(rng.uniform_index(7)) - 3;
    const int ky = static_cast<int>(rng.uniform_index(7)) - 3;
    const Pose2D shift(kx * r.resolution, ky * r.resolution, 0.0);
    const double got = grid_iou(r, r, shift);
    const double want = oracles::set_iou(r, r, shift);
    CHECK(std::abs(got - want) <= 0.02);

    const Pose2D x(rng.uniform(-1, 1), rng.uniform(-1, 1),
                   rng.uniform(-0.5, 0.5));
    const OccupancyGrid c =
        oracles::random_grid(300 + i, 40, 40, 0.2, 0.12, 0.02);
    CHECK(std::abs(grid_iou(r, c, x) - grid_iou(c, r, inverse(x))) <= 0.02);
  }
}
