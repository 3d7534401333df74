#pragma once

#include <cstdint>
#include <vector>

#include "topoloc/point_cloud.hpp"

namespace topoloc {

// Range-view projection of a structured cloud. range = 0 marks a pixel
// with no return; index maps each pixel back to its source point.
struct RangeImage {
  int32_t rows = 0;
  int32_t cols = 0;
  std::vector<float> range;
  std::vector<int32_t> index;

  float at(int32_t r, int32_t c) const {
    return range[static_cast<size_t>(r) * cols + c];
  }
  int32_t index_at(int32_t r, int32_t c) const {
    return index[static_cast<size_t>(r) * cols + c];
  }
  bool valid(int32_t r, int32_t c) const { return at(r, c) > 0.0f; }

  // Throws EmptyImage when the cloud has no structured returns. Keeps the
  // nearest return when several points share a pixel.
  static RangeImage from_cloud(const PointCloud& cloud);
};

}  // namespace topoloc
