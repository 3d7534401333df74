#include "topoloc/serialize.hpp"

#include <cstring>
#include <fstream>

#include <zlib.h>

#include "topoloc/errors.hpp"

namespace topoloc {

namespace {

constexpr char kGridMagic[4] = {'T', 'L', 'G', 'R'};
constexpr char kLocMagic[4] = {'T', 'L', 'O', 'C'};
constexpr uint16_t kGridVersion = 1;
constexpr uint16_t kLocVersion = 1;
constexpr uint16_t kMaxRun = 1 << 14;

template <typename T>
void append_pod(std::vector<uint8_t>& out, const T& v) {
  const size_t n = out.size();
  out.resize(n + sizeof(T));
  std::memcpy(out.data() + n, &v, sizeof(T));
}

template <typename T>
T parse_pod(const std::vector<uint8_t>& data, size_t& offset) {
  if (offset + sizeof(T) > data.size())
    throw CorruptMap("truncated blob");
  T v;
  std::memcpy(&v, data.data() + offset, sizeof(T));
  offset += sizeof(T);
  return v;
}

void append_features(std::vector<uint8_t>& out,
                     const std::vector<Feature>& feats, FeatureKind kind) {
  append_pod(out, static_cast<uint8_t>(kind));
  const uint16_t desc_bytes =
      feats.empty() ? 0 : static_cast<uint16_t>(feats.front().desc.size());
  append_pod(out, desc_bytes);
  append_pod(out, static_cast<uint32_t>(feats.size()));
  for (const Feature& f : feats) {
    append_pod(out, f.pos.x());
    append_pod(out, f.pos.y());
    append_pod(out, f.response);
    out.insert(out.end(), f.desc.begin(), f.desc.end());
  }
}

std::vector<Feature> parse_features(const std::vector<uint8_t>& data,
                                    size_t& offset) {
  const auto kind = static_cast<FeatureKind>(parse_pod<uint8_t>(data, offset));
  const uint16_t desc_bytes = parse_pod<uint16_t>(data, offset);
  const uint32_t count = parse_pod<uint32_t>(data, offset);
  std::vector<Feature> feats(count);
  for (uint32_t i = 0; i < count; ++i) {
    Feature& f = feats[i];
    f.kind = kind;
    f.pos.x() = parse_pod<float>(data, offset);
    f.pos.y() = parse_pod<float>(data, offset);
    f.response = parse_pod<float>(data, offset);
    if (offset + desc_bytes > data.size()) throw CorruptMap("truncated blob");
    f.desc.assign(data.begin() + offset, data.begin() + offset + desc_bytes);
    offset += desc_bytes;
  }
  return feats;
}

}  // namespace

uint32_t crc32_of(const uint8_t* data, size_t size) {
  return static_cast<uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data),
              static_cast<uInt>(size)));
}

void append_grid(std::vector<uint8_t>& out, const OccupancyGrid& grid) {
  out.insert(out.end(), kGridMagic, kGridMagic + 4);
  append_pod(out, kGridVersion);
  append_pod(out, static_cast<uint16_t>(0));
  append_pod(out, grid.resolution);
  append_pod(out, static_cast<uint32_t>(grid.width));
  append_pod(out, static_cast<uint32_t>(grid.height));
  append_pod(out, grid.origin.x);
  append_pod(out, grid.origin.y);
  append_pod(out, grid.origin.theta);

  std::vector<uint16_t> runs;
  size_t i = 0;
  const size_t n = grid.cells.size();
  while (i < n) {
    const CellClass c = grid.cells[i];
    size_t len = 1;
    while (i + len < n && grid.cells[i + len] == c && len < kMaxRun) ++len;
    runs.push_back(static_cast<uint16_t>(
        (static_cast<uint16_t>(len - 1) << 2) | static_cast<uint16_t>(c)));
    i += len;
  }
  append_pod(out, static_cast<uint32_t>(runs.size()));
  for (uint16_t r : runs) append_pod(out, r);
}

OccupancyGrid parse_grid(const std::vector<uint8_t>& data, size_t& offset) {
  if (offset + 4 > data.size() ||
      std::memcmp(data.data() + offset, kGridMagic, 4) != 0)
    throw CorruptMap("bad grid magic");
  offset += 4;
  if (parse_pod<uint16_t>(data, offset) != kGridVersion)
    throw CorruptMap("unsupported grid version");
  parse_pod<uint16_t>(data, offset);
  const double resolution = parse_pod<double>(data, offset);
  const uint32_t width = parse_pod<uint32_t>(data, offset);
  const uint32_t height = parse_pod<uint32_t>(data, offset);
  const double ox = parse_pod<double>(data, offset);
  const double oy = parse_pod<double>(data, offset);
  const double oth = parse_pod<double>(data, offset);
  if (resolution <= 0.0 || width == 0 || height == 0 ||
      static_cast<uint64_t>(width) * height > (1u << 28))
    throw CorruptMap("implausible grid header");

  OccupancyGrid grid(static_cast<int32_t>(width), static_cast<int32_t>(height),
                     resolution, Pose2D(ox, oy, oth));
  const uint32_t run_count = parse_pod<uint32_t>(data, offset);
  size_t cell = 0;
  for (uint32_t r = 0; r < run_count; ++r) {
    const uint16_t run = parse_pod<uint16_t>(data, offset);
    const size_t len = static_cast<size_t>(run >> 2) + 1;
    const auto cls = static_cast<CellClass>(run & 0x3);
    if (cell + len > grid.cells.size()) throw CorruptMap("grid runs overflow");
    std::fill(grid.cells.begin() + cell, grid.cells.begin() + cell + len, cls);
    cell += len;
  }
  if (cell != grid.cells.size()) throw CorruptMap("grid runs underflow");
  return grid;
}

void write_location_blob(const std::string& path, const ScanRecord& rec,
                         const PlaceDescriptor& descriptor) {
  std::vector<uint8_t> payload;
  append_grid(payload, rec.grid);
  append_pod(payload, static_cast<uint32_t>(descriptor.v.size()));
  for (float x : descriptor.v) append_pod(payload, x);
  append_features(payload, rec.features_global, FeatureKind::OrientedBinary);
  append_features(payload, rec.features_edge, FeatureKind::CornerScore);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(kLocMagic, 4);
  const uint16_t version = kLocVersion, flags = 0;
  os.write(reinterpret_cast<const char*>(&version), 2);
  os.write(reinterpret_cast<const char*>(&flags), 2);
  const uint32_t size = static_cast<uint32_t>(payload.size());
  os.write(reinterpret_cast<const char*>(&size), 4);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  const uint32_t crc = crc32_of(payload.data(), payload.size());
  os.write(reinterpret_cast<const char*>(&crc), 4);
  if (!os) throw IoError("short write to " + path);
}

void read_location_blob(const std::string& path, ScanRecord& rec,
                        PlaceDescriptor& descriptor) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CorruptMap("missing location blob " + path);
  char magic[4];
  uint16_t version = 0, flags = 0;
  uint32_t size = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), 2);
  is.read(reinterpret_cast<char*>(&flags), 2);
  is.read(reinterpret_cast<char*>(&size), 4);
  if (!is || std::memcmp(magic, kLocMagic, 4) != 0 || version != kLocVersion)
    throw CorruptMap("bad location header in " + path);
  std::vector<uint8_t> payload(size);
  is.read(reinterpret_cast<char*>(payload.data()), size);
  uint32_t crc = 0;
  is.read(reinterpret_cast<char*>(&crc), 4);
  if (!is) throw CorruptMap("truncated location blob " + path);
  if (crc != crc32_of(payload.data(), payload.size()))
    throw CorruptMap("checksum mismatch in " + path);

  size_t offset = 0;
  rec = ScanRecord{};
  rec.grid = parse_grid(payload, offset);
  const uint32_t dim = parse_pod<uint32_t>(payload, offset);
  if (dim > 65536) throw CorruptMap("implausible descriptor dim");
  descriptor.v.resize(dim);
  for (uint32_t i = 0; i < dim; ++i)
    descriptor.v[i] = parse_pod<float>(payload, offset);
  rec.features_global = parse_features(payload, offset);
  rec.features_edge = parse_features(payload, offset);
  if (offset != payload.size()) throw CorruptMap("trailing bytes in " + path);
}

}  // namespace topoloc
