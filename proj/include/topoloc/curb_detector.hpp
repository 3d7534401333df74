#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "topoloc/point_cloud.hpp"
#include "topoloc/range_image.hpp"

namespace topoloc {

struct CurbParams {
  int std_window = 11;            // azimuth bins per variance window
  double sigma_threshold = 0.05;  // range variance bound, m^2
  double sigma_y = 3.0;           // center-line sampling weight, m
  int sample_n = 2000;            // plane-fit sample size
  double d_threshold = 0.05;      // RANSAC inlier distance, m
  int ransac_iters = 200;
  double curb_height = 0.1;       // ground mask bound, m
  int upsample_factor = 3;        // range-image row upsampling
  int dilate_w = 50;              // exclusion dilation, azimuth bins
  int dilate_h = 7;               // exclusion dilation, upsampled rows
  // An edge neighbor must be within this range gap to count; a boundary
  // seen across a multi-meter gap is localized no better than the gap.
  double edge_range_gap = 0.5;
};

// Rigid 3D alignment produced by the plane fit: q = R * p + t maps the
// input cloud into the ground-aligned frame (plane -> z = 0).
struct PlaneFit {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  std::vector<int32_t> inliers;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
};

// Retains points whose windowed range variance along azimuth (circular
// window of std_window bins) is below sigma_threshold. Returns source
// point indices. OpenMP-parallel over rings.
std::vector<int32_t> range_std_window_filter(const RangeImage& ri,
                                             const CurbParams& p);
namespace serial {
std::vector<int32_t> range_std_window_filter(const RangeImage& ri,
                                             const CurbParams& p);
}

// Weighted sampling without replacement, weight exp(-y^2 / (2 sigma_y^2)).
// n >= |points| returns all points. Deterministic for a fixed seed.
std::vector<Point> weighted_center_sample(const std::vector<Point>& points,
                                          double sigma_y, size_t n,
                                          uint64_t seed);

// RANSAC plane fit; throws DegenerateInput on < 3 points or collinear
// input. The returned transform rotates the plane normal onto +z and
// shifts the plane to z = 0.
PlaneFit ransac_fit_plane(const std::vector<Point>& points,
                          double d_threshold, int iters, uint64_t seed);

// Optional range-view masks for debugging (upsampled geometry).
struct CurbDebug {
  int32_t rows = 0, cols = 0;
  std::vector<uint8_t> ground_mask;
  std::vector<uint8_t> exclusion_mask;
  std::vector<uint8_t> edge_mask;
};

// Full curb pipeline: variance filter -> center-weighted sample -> RANSAC
// plane fit -> leveling -> row upsampling -> height masks -> edge pixels
// of the ground mask, reconstructed as 3D points in the ground-aligned
// robot frame. Returned points satisfy |z| <= curb_height.
std::vector<Point> detect_curbs(const PointCloud& cloud, const CurbParams& p,
                                uint64_t seed = 0, CurbDebug* debug = nullptr);

}  // namespace topoloc
