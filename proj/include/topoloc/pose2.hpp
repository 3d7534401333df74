#pragma once

#include <cmath>

#include <Eigen/Core>

namespace topoloc {

// Wraps an angle to (-pi, pi].
inline double normalize_angle(double theta) {
  double a = std::remainder(theta, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

// SE(2) element. Used both for global poses and for relative transforms;
// theta is kept normalized to (-pi, pi] by every constructor and operation.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  static Pose2D identity() { return {}; }

  Eigen::Vector2d translation() const { return {x, y}; }
};

inline Pose2D compose(const Pose2D& a, const Pose2D& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
          a.theta + b.theta};
}

inline Pose2D inverse(const Pose2D& p) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta};
}

inline Eigen::Vector2d apply(const Pose2D& p, const Eigen::Vector2d& pt) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {p.x + c * pt.x() - s * pt.y(), p.y + s * pt.x() + c * pt.y()};
}

// Relative transform taking a's frame to b's frame: inverse(a) * b.
inline Pose2D between(const Pose2D& a, const Pose2D& b) {
  return compose(inverse(a), b);
}

inline double translation_distance(const Pose2D& a, const Pose2D& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace topoloc
