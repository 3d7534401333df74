#include "topoloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"
#include "topoloc/rng.hpp"

namespace topoloc {

std::array<Eigen::Vector2d, 4> Building::corners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  auto rot = [&](double x, double y) -> Eigen::Vector2d {
    return center + Eigen::Vector2d(c * x - s * y, s * x + c * y);
  };
  return {rot(half_x, half_y), rot(-half_x, half_y), rot(-half_x, -half_y),
          rot(half_x, -half_y)};
}

namespace {

double point_segment_dist(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                          const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

bool World::on_road(const Eigen::Vector2d& p) const {
  for (const RoadSegment& r : roads)
    if (point_segment_dist(p, r.a, r.b) <= r.halfwidth) return true;
  return false;
}

bool World::in_bounds(const Eigen::Vector2d& p) const {
  return p.x() >= bound_min.x() && p.x() <= bound_max.x() &&
         p.y() >= bound_min.y() && p.y() <= bound_max.y();
}

double World::ground_height(const Eigen::Vector2d& p) const {
  return on_road(p) ? 0.0 : curb_height;
}

World generate_world(uint64_t seed, const WorldParams& params) {
  if (params.blocks_x < 1 || params.blocks_y < 1 || params.block_size <= 0.0 ||
      params.road_halfwidth <= 0.0 || params.curb_height <= 0.0 ||
      params.curb_height > 0.3)
    throw InvalidParams("bad world parameters");
  if (params.building_margin <= params.road_halfwidth)
    throw InvalidParams("building_margin must exceed road_halfwidth");

  World w;
  w.curb_height = params.curb_height;
  const double B = params.block_size;
  const double ext_x = params.blocks_x * B;
  const double ext_y = params.blocks_y * B;

  for (int i = 0; i <= params.blocks_x; ++i)
    w.roads.push_back({{i * B, 0.0}, {i * B, ext_y}, params.road_halfwidth});
  for (int j = 0; j <= params.blocks_y; ++j)
    w.roads.push_back({{0.0, j * B}, {ext_x, j * B}, params.road_halfwidth});

  Rng rng(seed);
  for (int i = 0; i < params.blocks_x; ++i) {
    for (int j = 0; j < params.blocks_y; ++j) {
      for (int k = 0; k < params.buildings_per_block; ++k) {
        Building b;
        b.center = Eigen::Vector2d((i + 0.5) * B, (j + 0.5) * B) +
                   Eigen::Vector2d(rng.uniform(-2.0, 2.0),
                                   rng.uniform(-2.0, 2.0));
        const double base = B / 2.0 - params.building_margin;
        b.half_x = std::max(2.0, base + rng.uniform(-2.0, 2.0));
        b.half_y = std::max(2.0, base + rng.uniform(-2.0, 2.0));
        b.yaw = rng.uniform(-0.08, 0.08);
        b.height = params.building_height + rng.uniform(0.0, 4.0);
        w.buildings.push_back(b);
      }
    }
  }

  // Street furniture on the sidewalk band of each block edge.
  const double side_lo = params.road_halfwidth + 0.6;
  const double side_hi = params.building_margin - 0.8;
  auto place_furniture = [&](int per_block, double half_lo, double half_hi,
                             double h_lo, double h_hi) {
    if (side_hi <= side_lo) return;
    for (int i = 0; i < params.blocks_x; ++i) {
      for (int j = 0; j < params.blocks_y; ++j) {
        for (int k = 0; k < per_block; ++k) {
          const int edge = static_cast<int>(rng.uniform_index(4));
          const double along = rng.uniform(0.15, 0.85) * B;
          const double off = rng.uniform(side_lo, side_hi);
          Eigen::Vector2d pos;
          switch (edge) {
            case 0: pos = {i * B + along, j * B + off}; break;
            case 1: pos = {i * B + along, (j + 1) * B - off}; break;
            case 2: pos = {i * B + off, j * B + along}; break;
            default: pos = {(i + 1) * B - off, j * B + along}; break;
          }
          Building f;
          f.center = pos;
          f.half_x = rng.uniform(half_lo, half_hi);
          f.half_y = rng.uniform(half_lo, half_hi);
          f.yaw = rng.uniform(-M_PI / 4, M_PI / 4);
          f.height = rng.uniform(h_lo, h_hi);
          w.buildings.push_back(f);
        }
      }
    }
  };
  place_furniture(params.poles_per_block, 0.08, 0.15, 2.5, 4.0);
  place_furniture(params.clutter_per_block, 0.25, 0.7, 0.8, 2.0);

  // Boxes stand on the sidewalk right behind a curb line.
  for (int k = 0; k < params.boxes; ++k) {
    const size_t ri = rng.uniform_index(w.roads.size());
    const RoadSegment& r = w.roads[ri];
    const Eigen::Vector2d dir = (r.b - r.a).normalized();
    const Eigen::Vector2d nrm(-dir.y(), dir.x());
    const double along = rng.uniform(0.15, 0.85) * (r.b - r.a).norm();
    const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
    Building box;
    box.center = r.a + along * dir + side * (r.halfwidth + 0.6) * nrm;
    box.half_x = 0.3;
    box.half_y = 0.3;
    box.yaw = 0.0;
    box.height = 1.7;
    w.buildings.push_back(box);
  }

  w.bound_min = {-params.bounds_margin, -params.bounds_margin};
  w.bound_max = {ext_x + params.bounds_margin, ext_y + params.bounds_margin};
  return w;
}

double LidarModel::elevation(int ring) const {
  const double lo = elev_min_deg * M_PI / 180.0;
  const double hi = elev_max_deg * M_PI / 180.0;
  if (rings <= 1) return lo;
  return lo + (hi - lo) * ring / (rings - 1);
}

namespace {

// First hit of a 2D ray against a segment; returns distance or +inf.
double ray_segment(const Eigen::Vector2d& o, const Eigen::Vector2d& d,
                   const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d v = b - a;
  const double denom = d.x() * v.y() - d.y() * v.x();
  if (std::abs(denom) < 1e-12) return std::numeric_limits<double>::infinity();
  const Eigen::Vector2d w = a - o;
  const double s = (w.x() * v.y() - w.y() * v.x()) / denom;
  const double u = (w.x() * d.y() - w.y() * d.x()) / denom;
  if (s <= 1e-9 || u < 0.0 || u > 1.0)
    return std::numeric_limits<double>::infinity();
  return s;
}

struct WallSeg {
  Eigen::Vector2d a, b;
  double height;
};

// Deterministic per-ray standard normal.
double gaussian_at(uint64_t seed, uint64_t stream) {
  const uint64_t b1 = mix64(seed, 2 * stream);
  const uint64_t b2 = mix64(seed, 2 * stream + 1);
  double u1 = static_cast<double>(b1 >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <bool Parallel>
PointCloud scan_impl(const World& world, const Pose2D& pose,
                     const LidarModel& lidar, uint64_t seed) {
  if (!world.in_bounds({pose.x, pose.y}))
    throw OutOfBounds("scan pose outside world bounds");

  std::vector<WallSeg> walls;
  for (const Building& b : world.buildings) {
    const auto c = b.corners();
    for (int k = 0; k < 4; ++k)
      walls.push_back({c[k], c[(k + 1) % 4], b.height});
  }

  const Eigen::Vector2d origin(pose.x, pose.y);
  const double h = lidar.sensor_height;
  const int n_rays = lidar.rings * lidar.azimuth_bins;
  std::vector<Point> hits(n_rays);
  std::vector<uint8_t> got(n_rays, 0);

  auto cast_ray = [&](int64_t ray) {
    const int ring = static_cast<int>(ray) / lidar.azimuth_bins;
    const int az = static_cast<int>(ray) % lidar.azimuth_bins;
    const double elev = lidar.elevation(ring);
    const double phi_r = 2.0 * M_PI * az / lidar.azimuth_bins;
    const double phi_w = phi_r + pose.theta;
    const Eigen::Vector2d dir_w(std::cos(phi_w), std::sin(phi_w));
    const double tan_e = std::tan(elev);

    double s_hit = std::numeric_limits<double>::infinity();
    double z_hit = 0.0;

    // Ground, sidewalk, or the curb face between them. Assumes the sensor
    // sits above the sidewalk level.
    if (tan_e < 0.0 && h > world.curb_height) {
      const double s_side = (h - world.curb_height) / -tan_e;
      const double s_road = h / -tan_e;
      if (!world.on_road(origin + s_side * dir_w)) {
        s_hit = s_side;
        z_hit = world.curb_height;
      } else {
        // March from the sidewalk-level crossing to the road-level one;
        // the first road->sidewalk region change is a curb face.
        bool found = false;
        double prev = s_side;
        const double step = 0.05;
        const int n_steps =
            static_cast<int>(std::ceil((s_road - s_side) / step));
        for (int k = 1; k <= n_steps && !found; ++k) {
          const double s = std::min(s_road, s_side + k * step);
          if (!world.on_road(origin + s * dir_w)) {
            double lo = prev, hi = s;
            for (int it = 0; it < 40; ++it) {
              const double mid = 0.5 * (lo + hi);
              (world.on_road(origin + mid * dir_w) ? lo : hi) = mid;
            }
            s_hit = hi;
            z_hit = h - hi * -tan_e;
            found = true;
          }
          prev = s;
        }
        if (!found) {
          s_hit = s_road;
          z_hit = 0.0;
        }
      }
    }

    // Building and box walls block anything farther.
    for (const WallSeg& wseg : walls) {
      const double s = ray_segment(origin, dir_w, wseg.a, wseg.b);
      if (s >= s_hit) continue;
      const double z = h + s * tan_e;
      if (z < 0.0 || z > wseg.height) continue;
      s_hit = s;
      z_hit = z;
    }

    if (!std::isfinite(s_hit)) return;
    const double cos_e = std::cos(elev);
    double rho = s_hit / cos_e;
    if (rho > lidar.max_range || rho < lidar.min_range) return;
    if (lidar.range_sigma > 0.0)
      rho += lidar.range_sigma * gaussian_at(seed, static_cast<uint64_t>(ray));

    Point p;
    p.x = rho * cos_e * std::cos(phi_r);
    p.y = rho * cos_e * std::sin(phi_r);
    p.z = h + rho * std::sin(elev);
    p.ring = ring;
    p.azimuth = az;
    hits[ray] = p;
    got[ray] = 1;
  };

  if constexpr (Parallel) parallel_for(n_rays, cast_ray);
  else for (int64_t ray = 0; ray < n_rays; ++ray) cast_ray(ray);

  PointCloud cloud;
  cloud.rings = lidar.rings;
  cloud.azimuth_bins = lidar.azimuth_bins;
  cloud.points.reserve(n_rays / 2);
  for (int ray = 0; ray < n_rays; ++ray)
    if (got[ray]) cloud.points.push_back(hits[ray]);
  return cloud;
}

}  // namespace

PointCloud simulate_scan(const World& world, const Pose2D& pose,
                         const LidarModel& lidar, uint64_t seed) {
  return scan_impl<true>(world, pose, lidar, seed);
}

namespace serial {
PointCloud simulate_scan(const World& world, const Pose2D& pose,
                         const LidarModel& lidar, uint64_t seed) {
  return scan_impl<false>(world, pose, lidar, seed);
}
}  // namespace serial

RunDataset simulate_run(const World& world,
                        const std::vector<Pose2D>& trajectory,
                        const LidarModel& lidar, const OdomNoise& noise,
                        uint64_t seed, double dt) {
  if (trajectory.empty()) throw EmptyRun("empty trajectory");
  RunDataset run;
  run.gt_poses = trajectory;
  run.timestamps.resize(trajectory.size());
  run.odometry.resize(trajectory.size());
  run.odometry[0] = Pose2D::identity();
  for (size_t t = 0; t < trajectory.size(); ++t) {
    run.timestamps[t] = static_cast<double>(t) * dt;
    if (t == 0) continue;
    const Pose2D inc = between(trajectory[t - 1], trajectory[t]);
    Rng rng(mix64(seed, 0x0d0d0000ULL + t));
    Pose2D noisy;
    noisy.x = inc.x * (1.0 + noise.scale * rng.normal()) +
              noise.sigma_xy * rng.normal();
    noisy.y = inc.y * (1.0 + noise.scale * rng.normal()) +
              noise.sigma_xy * rng.normal();
    noisy.theta =
        normalize_angle(inc.theta + noise.sigma_theta * rng.normal());
    run.odometry[t] = noisy;
  }
  run.frames.resize(trajectory.size());
  auto make_frame = [&](int64_t t) {
    run.frames[t] = serial::simulate_scan(world, trajectory[t], lidar,
                                          mix64(seed, 0xf0f00000ULL + t));
  };
  parallel_for(static_cast<int64_t>(trajectory.size()), make_frame);
  return run;
}

std::vector<Pose2D> trajectory_from_waypoints(
    const std::vector<Eigen::Vector2d>& waypoints, double step) {
  if (waypoints.size() < 2 || step <= 0.0)
    throw InvalidParams("need >= 2 waypoints and positive step");
  std::vector<Pose2D> poses;
  for (size_t k = 0; k + 1 < waypoints.size(); ++k) {
    const Eigen::Vector2d a = waypoints[k], b = waypoints[k + 1];
    const double len = (b - a).norm();
    const double heading = std::atan2(b.y() - a.y(), b.x() - a.x());
    const int n = std::max(1, static_cast<int>(std::floor(len / step)));
    const Eigen::Vector2d dir = (b - a) / len;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d p = a + (i * step) * dir;
      poses.emplace_back(p.x(), p.y(), heading);
    }
  }
  const Eigen::Vector2d& last = waypoints.back();
  const Eigen::Vector2d& prev = waypoints[waypoints.size() - 2];
  poses.emplace_back(last.x(), last.y(),
                     std::atan2(last.y() - prev.y(), last.x() - prev.x()));
  return poses;
}

std::vector<Pose2D> rectangle_loop(const Eigen::Vector2d& lo,
                                   const Eigen::Vector2d& hi, double step) {
  const std::vector<Eigen::Vector2d> wp = {
      {lo.x(), lo.y()}, {hi.x(), lo.y()}, {hi.x(), hi.y()},
      {lo.x(), hi.y()}, {lo.x(), lo.y()}};
  return trajectory_from_waypoints(wp, step);
}

}  // namespace topoloc
