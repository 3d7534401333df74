#include "topoloc/place_recognition.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"

namespace topoloc {

double PlaceDescriptor::distance(const PlaceDescriptor& other) const {
  double acc = 0.0;
  const size_t n = std::min(v.size(), other.v.size());
  for (size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(v[i]) - other.v[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

PlaceDescriptor PolarSpectrumEncoder::encode(const ScanRecord& rec,
                                             int64_t) const {
  const int R = cfg_.radial_bins, A = cfg_.angular_bins;
  std::vector<double> hist(static_cast<size_t>(R) * A, 0.0);
  size_t occupied = 0;
  auto add = [&](const Eigen::Vector2d& p) {
    const double r = p.norm();
    if (r >= cfg_.r_max) return;
    const int rb = std::min(R - 1, static_cast<int>(r / (cfg_.r_max / R)));
    double a = std::atan2(p.y(), p.x());
    if (a < 0.0) a += 2.0 * M_PI;
    const int ab = std::min(A - 1, static_cast<int>(a / (2.0 * M_PI / A)));
    hist[static_cast<size_t>(rb) * A + ab] += 1.0;
    ++occupied;
  };
  for (const auto& p : rec.wall_points) add(p);
  for (const auto& p : rec.curb_points) add(p);
  if (occupied == 0) throw EmptyScan("no occupied cells to encode");

  // Per-radius angular DFT magnitudes: invariant to rotations of the scan
  // (circular shifts of the angular bins).
  const int K = A / 2 + 1;
  std::vector<float> feat(static_cast<size_t>(R) * K);
  for (int rb = 0; rb < R; ++rb) {
    const double* row = hist.data() + static_cast<size_t>(rb) * A;
    for (int k = 0; k < K; ++k) {
      double re = 0.0, im = 0.0;
      for (int j = 0; j < A; ++j) {
        const double ang = -2.0 * M_PI * j * k / A;
        re += row[j] * std::cos(ang);
        im += row[j] * std::sin(ang);
      }
      feat[static_cast<size_t>(rb) * K + k] =
          static_cast<float>(std::sqrt(re * re + im * im));
    }
  }

  PlaceDescriptor d;
  d.v.assign(static_cast<size_t>(cfg_.dim), 0.0f);
  const size_t ncopy = std::min(feat.size(), d.v.size());
  std::copy(feat.begin(), feat.begin() + ncopy, d.v.begin());
  double norm = 0.0;
  for (float x : d.v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm <= 0.0) throw EmptyScan("zero descriptor norm");
  for (float& x : d.v) x = static_cast<float>(x / norm);
  return d;
}

namespace {
constexpr char kDescMagic[4] = {'T', 'L', 'D', 'S'};
constexpr uint32_t kDescVersion = 1;
}  // namespace

void write_descriptor(const std::string& path, const PlaceDescriptor& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(kDescMagic, 4);
  const uint32_t version = kDescVersion, dim = d.dim(), reserved = 0;
  os.write(reinterpret_cast<const char*>(&version), 4);
  os.write(reinterpret_cast<const char*>(&dim), 4);
  os.write(reinterpret_cast<const char*>(&reserved), 4);
  os.write(reinterpret_cast<const char*>(d.v.data()),
           static_cast<std::streamsize>(d.v.size() * sizeof(float)));
  if (!os) throw IoError("short write to " + path);
}

PlaceDescriptor read_descriptor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  char magic[4];
  uint32_t version = 0, dim = 0, reserved = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), 4);
  is.read(reinterpret_cast<char*>(&dim), 4);
  is.read(reinterpret_cast<char*>(&reserved), 4);
  if (!is || std::memcmp(magic, kDescMagic, 4) != 0 ||
      version != kDescVersion || dim == 0 || dim > 65536)
    throw IoError("bad descriptor header in " + path);
  PlaceDescriptor d;
  d.v.resize(dim);
  is.read(reinterpret_cast<char*>(d.v.data()),
          static_cast<std::streamsize>(dim * sizeof(float)));
  if (!is) throw IoError("truncated descriptor file " + path);
  return d;
}

PlaceDescriptor FileDescriptorEncoder::encode(const ScanRecord&,
                                              int64_t frame_index) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%06lld.desc",
                static_cast<long long>(frame_index));
  return read_descriptor(dir_ + "/" + name);
}

std::vector<std::pair<int32_t, double>> retrieve_top_k(
    const PlaceDescriptor& q, const std::vector<PlaceDescriptor>& corpus,
    int k) {
  const int n = static_cast<int>(corpus.size());
  std::vector<std::pair<int32_t, double>> scored(n);
  parallel_for(n, [&](int64_t i) {
    scored[i] = {static_cast<int32_t>(i), q.distance(corpus[i])};
  });
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) {
                     return a.second < b.second ||
                            (a.second == b.second && a.first < b.first);
                   });
  if (k < n) scored.resize(std::max(0, k));
  return scored;
}

}  // namespace topoloc
