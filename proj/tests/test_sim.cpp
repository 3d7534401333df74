#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "topoloc/errors.hpp"
#include "topoloc/sim.hpp"

using namespace topoloc;

namespace {

// Flat world: one giant road corridor, optional single wall at x = 5.
World flat_world(bool with_wall) {
  World w;
  w.roads.push_back({{-200.0, 0.0}, {200.0, 0.0}, 200.0});
  w.curb_height = 0.15;
  w.bound_min = {-100.0, -100.0};
  w.bound_max = {100.0, 100.0};
  if (with_wall) {
    Building b;
    b.center = {10.0, 0.0};
    b.half_x = 5.0;
    b.half_y = 20.0;
    b.height = 10.0;
    w.buildings.push_back(b);
  }
  return w;
}

}  // namespace

TEST_CASE("generate_world is deterministic and honors counts") {
  WorldParams params;
  params.blocks_x = 2;
  params.blocks_y = 3;
  params.poles_per_block = 0;
  params.clutter_per_block = 0;
  const World a = generate_world(42, params);
  const World b = generate_world(42, params);
  REQUIRE(a.buildings.size() == b.buildings.size());
  CHECK(a.buildings.size() == 6);  // one cluster per block
  for (size_t i = 0; i < a.buildings.size(); ++i) {
    CHECK(a.buildings[i].center == b.buildings[i].center);
    CHECK(a.buildings[i].height == b.buildings[i].height);
  }

  params.buildings_per_block = 0;
  const World empty = generate_world(7, params);
  CHECK(empty.buildings.empty());
  CHECK(empty.roads.size() == 3 + 4);

  WorldParams bad;
  bad.block_size = -1.0;
  CHECK_THROWS_AS(generate_world(1, bad), InvalidParams);
}

TEST_CASE("single wall ahead returns exact range") {
  const World w = flat_world(true);
  LidarModel lidar;
  lidar.rings = 1;
  lidar.elev_min_deg = 0.0;
  lidar.elev_max_deg = 0.0;
  lidar.range_sigma = 0.0;
  const PointCloud cloud = simulate_scan(w, Pose2D(0, 0, 0), lidar, 1);

  bool found_forward = false;
  for (const Point& p : cloud.points) {
    if (p.azimuth != 0) continue;
    found_forward = true;
    CHECK(p.x == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(std::abs(p.y) < 1e-9);
    CHECK(p.z == doctest::Approx(lidar.sensor_height).epsilon(1e-9));
  }
  CHECK(found_forward);
}

TEST_CASE("open flat ground matches h/tan(elevation)") {
  const World w = flat_world(false);
  LidarModel lidar;
  lidar.range_sigma = 0.0;
  const PointCloud cloud = simulate_scan(w, Pose2D(0, 0, 0.3), lidar, 1);
  REQUIRE(!cloud.empty());
  size_t checked = 0;
  for (const Point& p : cloud.points) {
    const double elev = lidar.elevation(p.ring);
    if (elev >= 0.0) continue;
    const double expect = lidar.sensor_height / std::tan(-elev);
    if (expect > lidar.max_range) continue;
    CHECK(std::hypot(p.x, p.y) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(std::abs(p.z) < 1e-6);
    ++checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("returns lie on world surfaces and curb faces on curb lines") {
  World w;
  w.roads.push_back({{-100.0, 0.0}, {100.0, 0.0}, 5.0});
  w.curb_height = 0.15;
  w.bound_min = {-120.0, -120.0};
  w.bound_max = {120.0, 120.0};

  LidarModel lidar;
  lidar.range_sigma = 0.0;
  const Pose2D pose(3.0, 1.0, 0.4);
  const PointCloud cloud = simulate_scan(w, pose, lidar, 5);
  REQUIRE(!cloud.empty());

  size_t faces = 0;
  for (const Point& p : cloud.points) {
    const Eigen::Vector2d xy = apply(pose, {p.x, p.y});
    if (std::abs(p.z) < 1e-9) {
      CHECK(w.on_road(xy));
    } else if (std::abs(p.z - w.curb_height) < 1e-9) {
      CHECK(!w.on_road(xy));
    } else if (p.z > 0.0 && p.z < w.curb_height) {
      // curb face hits sit exactly on the road boundary lines y = +-5
      CHECK(std::abs(std::abs(xy.y()) - 5.0) < 1e-6);
      ++faces;
    }
  }
  CHECK(faces > 10);
}

TEST_CASE("scan pose outside bounds raises OutOfBounds") {
  const World w = flat_world(false);
  CHECK_THROWS_AS(simulate_scan(w, Pose2D(500, 0, 0), LidarModel{}, 1),
                  OutOfBounds);
}

TEST_CASE("noiseless odometry dead-reckons the trajectory exactly") {
  const World w = flat_world(false);
  LidarModel lidar;
  lidar.rings = 2;
  lidar.azimuth_bins = 64;
  const auto traj = rectangle_loop({-20, -20}, {20, 20}, 1.0);
  const RunDataset run = simulate_run(w, traj, lidar, OdomNoise{0, 0, 0}, 3);
  Pose2D acc = run.gt_poses.front();
  for (size_t t = 1; t < run.size(); ++t) {
    acc = compose(acc, run.odometry[t]);
    CHECK(std::abs(acc.x - run.gt_poses[t].x) < 1e-9);
    CHECK(std::abs(acc.y - run.gt_poses[t].y) < 1e-9);
    CHECK(std::abs(normalize_angle(acc.theta - run.gt_poses[t].theta)) < 1e-9);
  }
}

TEST_CASE("additive odometry noise accumulates unbounded drift") {
  const World w = flat_world(false);
  LidarModel lidar;
  lidar.rings = 1;
  lidar.azimuth_bins = 8;
  std::vector<Pose2D> traj;
  for (int i = 0; i < 1000; ++i) traj.emplace_back(0.05 * i - 40.0, 0.0, 0.0);

  OdomNoise noise{0.0, 0.02, 0.0};
  std::vector<double> endpoint_errors;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const RunDataset run = simulate_run(w, traj, lidar, noise, seed);
    Pose2D acc = run.gt_poses.front();
    for (size_t t = 1; t < run.size(); ++t)
      acc = compose(acc, run.odometry[t]);
    endpoint_errors.push_back(translation_distance(acc, run.gt_poses.back()));
  }
  std::sort(endpoint_errors.begin(), endpoint_errors.end());
  CHECK(endpoint_errors[endpoint_errors.size() / 2] >= 0.5);
}

TEST_CASE("same seed reproduces the dataset bit-exactly") {
  const World w = flat_world(true);
  LidarModel lidar;
  lidar.rings = 4;
  lidar.azimuth_bins = 128;
  const auto traj = rectangle_loop({-10, -10}, {10, 10}, 2.0);
  const RunDataset a = simulate_run(w, traj, lidar, OdomNoise{}, 9);
  const RunDataset b = simulate_run(w, traj, lidar, OdomNoise{}, 9);
  REQUIRE(a.size() == b.size());
  for (size_t t = 0; t < a.size(); ++t) {
    CHECK(a.odometry[t].x == b.odometry[t].x);
    CHECK(a.odometry[t].y == b.odometry[t].y);
    CHECK(a.odometry[t].theta == b.odometry[t].theta);
    REQUIRE(a.frames[t].size() == b.frames[t].size());
    for (size_t i = 0; i < a.frames[t].size(); ++i) {
      CHECK(a.frames[t].points[i].x == b.frames[t].points[i].x);
      CHECK(a.frames[t].points[i].y == b.frames[t].points[i].y);
      CHECK(a.frames[t].points[i].z == b.frames[t].points[i].z);
    }
  }
}

TEST_CASE("trajectory generators") {
  const auto traj = trajectory_from_waypoints({{0, 0}, {10, 0}}, 0.5);
  CHECK(traj.size() == 21);
  CHECK(traj.front().x == doctest::Approx(0.0));
  CHECK(traj.back().x == doctest::Approx(10.0));
  for (const Pose2D& p : traj) CHECK(p.theta == doctest::Approx(0.0));

  const auto loop = rectangle_loop({0, 0}, {20, 20}, 0.5);
  CHECK(loop.size() == 4 * 40 + 1);
  CHECK_THROWS_AS(trajectory_from_waypoints({{0, 0}}, 0.5), InvalidParams);
}
