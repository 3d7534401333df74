#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "topoloc/point_cloud.hpp"
#include "topoloc/pose2.hpp"

namespace topoloc {

// Synthetic urban world: a grid of city blocks separated by road
// corridors. Everything off the roads is sidewalk raised by curb_height;
// buildings and boxes are vertical-walled prisms standing on the blocks.
struct Building {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_x = 10.0, half_y = 10.0;
  double yaw = 0.0;
  double height = 6.0;

  std::array<Eigen::Vector2d, 4> corners() const;
};

struct RoadSegment {
  Eigen::Vector2d a, b;
  double halfwidth = 5.0;
};

struct World {
  std::vector<Building> buildings;
  std::vector<RoadSegment> roads;
  double curb_height = 0.15;
  Eigen::Vector2d bound_min = Eigen::Vector2d::Zero();
  Eigen::Vector2d bound_max = Eigen::Vector2d::Zero();

  bool on_road(const Eigen::Vector2d& p) const;
  bool in_bounds(const Eigen::Vector2d& p) const;
  // Ground surface height (road 0, sidewalk curb_height).
  double ground_height(const Eigen::Vector2d& p) const;
};

struct WorldParams {
  int blocks_x = 3;
  int blocks_y = 3;
  double block_size = 60.0;       // road centerline pitch
  double road_halfwidth = 5.0;
  double curb_height = 0.15;
  double building_margin = 12.0;  // block edge to building wall
  int buildings_per_block = 1;
  double building_height = 6.0;
  int boxes = 0;                  // 1.7 m boxes next to curbs
  // Street furniture on the sidewalk ring; poles are thin tall posts,
  // clutter are bush/cabinet-sized blocks. Both give scans stable,
  // viewpoint-independent corner structure.
  int poles_per_block = 6;
  int clutter_per_block = 4;
  double bounds_margin = 30.0;
};

World generate_world(uint64_t seed, const WorldParams& params);

struct LidarModel {
  int rings = 16;
  double elev_min_deg = -15.0;
  double elev_max_deg = 3.0;
  // Dense enough that every 0.2 m grid cell inside the sensing radius is
  // sampled; sparser sweeps leave far walls half-rasterized and make
  // cell-set overlap measures unstable.
  int azimuth_bins = 2048;
  double max_range = 50.0;
  double min_range = 0.5;
  double range_sigma = 0.02;
  double sensor_height = 0.8;

  double elevation(int ring) const;
};

// Per-ring, per-azimuth ray casting against building walls, the two ground
// levels, and the curb faces between them. Points come back in the robot
// frame (ground near z = 0) with ring/azimuth indices set. Deterministic:
// each ray derives its noise from (seed, ray index). OpenMP-parallel over
// rays; bit-exact with the serial reference.
PointCloud simulate_scan(const World& world, const Pose2D& pose,
                         const LidarModel& lidar, uint64_t seed);
namespace serial {
PointCloud simulate_scan(const World& world, const Pose2D& pose,
                         const LidarModel& lidar, uint64_t seed);
}

struct OdomNoise {
  double scale = 0.01;        // multiplicative translation noise
  double sigma_xy = 0.01;     // additive, m per step
  double sigma_theta = 0.002; // additive, rad per step
};

struct RunDataset {
  std::vector<double> timestamps;
  std::vector<Pose2D> gt_poses;
  std::vector<Pose2D> odometry;  // odometry[0] = identity
  std::vector<PointCloud> frames;   // in-memory mode
  std::string dir;                  // on-disk mode
  bool on_disk = false;

  size_t size() const { return gt_poses.size(); }
  PointCloud frame(size_t i) const;
};

RunDataset simulate_run(const World& world,
                        const std::vector<Pose2D>& trajectory,
                        const LidarModel& lidar, const OdomNoise& noise,
                        uint64_t seed, double dt = 0.1);

// Densifies a waypoint polyline into poses spaced `step` apart, heading
// along each segment.
std::vector<Pose2D> trajectory_from_waypoints(
    const std::vector<Eigen::Vector2d>& waypoints, double step);

// Axis-aligned rectangle loop (counter-clockwise, closed).
std::vector<Pose2D> rectangle_loop(const Eigen::Vector2d& lo,
                                   const Eigen::Vector2d& hi, double step);

}  // namespace topoloc
