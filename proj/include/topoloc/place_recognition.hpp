#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "topoloc/grid_builder.hpp"

namespace topoloc {

// Fixed-dimension, L2-normalized global place descriptor.
struct PlaceDescriptor {
  std::vector<float> v;

  int dim() const { return static_cast<int>(v.size()); }
  double distance(const PlaceDescriptor& other) const;
};

struct PlaceConfig {
  int radial_bins = 16;
  int angular_bins = 32;
  double r_max = 40.0;
  int dim = 256;
};

// Descriptor source interface. The reference encoder computes descriptors
// from the scan itself; the file adapter plugs in precomputed descriptors
// from an external model without linking any inference runtime.
class PlaceEncoder {
 public:
  virtual ~PlaceEncoder() = default;
  virtual PlaceDescriptor encode(const ScanRecord& rec,
                                 int64_t frame_index) const = 0;
  virtual int dim() const = 0;
};

// Polar occupancy histogram over wall|curb cells (radial x angular bins),
// made rotation-invariant by per-radius angular spectral magnitudes,
// flattened to `dim` and L2-normalized. Throws EmptyScan when the grid has
// no occupied cells.
class PolarSpectrumEncoder : public PlaceEncoder {
 public:
  explicit PolarSpectrumEncoder(const PlaceConfig& cfg = {}) : cfg_(cfg) {}
  PlaceDescriptor encode(const ScanRecord& rec,
                         int64_t frame_index) const override;
  int dim() const override { return cfg_.dim; }

 private:
  PlaceConfig cfg_;
};

// Reads <dir>/NNNNNN.desc per frame index.
class FileDescriptorEncoder : public PlaceEncoder {
 public:
  FileDescriptorEncoder(std::string dir, int dim)
      : dir_(std::move(dir)), dim_(dim) {}
  PlaceDescriptor encode(const ScanRecord& rec,
                         int64_t frame_index) const override;
  int dim() const override { return dim_; }

 private:
  std::string dir_;
  int dim_;
};

// Descriptor file: 16-byte header (magic "TLDS", u32 version, u32 dim,
// u32 reserved) + dim little-endian float32 values.
void write_descriptor(const std::string& path, const PlaceDescriptor& d);
PlaceDescriptor read_descriptor(const std::string& path);

// k smallest Euclidean distances, ascending; k capped at the corpus size.
// Exhaustive scan, OpenMP-parallel distance evaluation.
std::vector<std::pair<int32_t, double>> retrieve_top_k(
    const PlaceDescriptor& q, const std::vector<PlaceDescriptor>& corpus,
    int k);

}  // namespace topoloc
