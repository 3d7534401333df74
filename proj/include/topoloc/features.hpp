#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "topoloc/grid.hpp"
#include "topoloc/pose2.hpp"

namespace topoloc {

// OrientedBinary: corner keypoints with orientation-steered 256-bit binary
// descriptors (global localization). CornerScore: the same corners with
// raw 7x7 intensity patches (edge traversal).
enum class FeatureKind : uint8_t { OrientedBinary = 0, CornerScore = 1 };

struct Feature {
  Eigen::Vector2f pos = Eigen::Vector2f::Zero();  // grid cells, sub-cell
  float response = 0.0f;
  FeatureKind kind = FeatureKind::OrientedBinary;
  std::vector<uint8_t> desc;
};

struct Correspondence {
  int32_t ref_idx = -1;
  int32_t cand_idx = -1;
  double dist = 0.0;
};

// Corner response of the rendered grid image (structure-tensor corner
// score). OpenMP-parallel over rows; serial reference for the tests.
std::vector<float> corner_response(const ImageU8& img);
namespace serial {
std::vector<float> corner_response(const ImageU8& img);
}

std::vector<Feature> detect_features(const OccupancyGrid& grid,
                                     FeatureKind kind, int max_n);

// Nearest-neighbor descriptor matching with a Lowe-style ratio test; one
// best candidate per reference feature.
std::vector<Correspondence> match_features(const std::vector<Feature>& ref,
                                           const std::vector<Feature>& cand,
                                           double ratio_max = 0.8);

// Scan-frame position of a feature detected on `grid`.
Eigen::Vector2d feature_point(const OccupancyGrid& grid, const Feature& f);

// Closed-form least-squares rigid 2D fit (Procrustes) of ref -> cand.
Pose2D procrustes2d(
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& pairs);

struct InitialTransform {
  Pose2D pose;
  std::vector<int32_t> inliers;
};

// Sample-consensus over 2-point minimal models followed by a Procrustes
// refit on the consensus set. Empty result = no consensus.
std::optional<InitialTransform> estimate_initial_transform(
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& pairs,
    double inlier_tol, int min_inliers = 5, int iters = 200,
    uint64_t seed = 0);

}  // namespace topoloc
