#include "topoloc/dataset_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "topoloc/errors.hpp"

namespace fs = std::filesystem;

namespace topoloc {

namespace {

constexpr char kFrameMagic[4] = {'T', 'L', 'F', 'R'};
constexpr uint32_t kFrameVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

std::string frame_path(const std::string& dir, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.bin", i);
  return dir + "/frames/" + buf;
}

}  // namespace

void write_point_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(kFrameMagic, 4);
  write_pod(os, kFrameVersion);
  write_pod(os, static_cast<uint32_t>(cloud.points.size()));
  write_pod(os, static_cast<uint16_t>(cloud.rings));
  write_pod(os, static_cast<uint16_t>(cloud.azimuth_bins));
  for (const Point& p : cloud.points) {
    const float rec[5] = {static_cast<float>(p.x), static_cast<float>(p.y),
                          static_cast<float>(p.z), static_cast<float>(p.ring),
                          static_cast<float>(p.azimuth)};
    os.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  if (!os) throw IoError("short write to " + path);
}

PointCloud read_point_cloud(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  char magic[4];
  is.read(magic, 4);
  uint32_t version = 0, count = 0;
  uint16_t rings = 0, az = 0;
  read_pod(is, version);
  read_pod(is, count);
  read_pod(is, rings);
  read_pod(is, az);
  if (!is || std::memcmp(magic, kFrameMagic, 4) != 0 ||
      version != kFrameVersion)
    throw IoError("bad frame header in " + path);
  PointCloud cloud;
  cloud.rings = rings;
  cloud.azimuth_bins = az;
  cloud.points.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    float rec[5];
    is.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (!is) throw IoError("truncated frame file " + path);
    cloud.points[i] = {rec[0], rec[1], rec[2], static_cast<int32_t>(rec[3]),
                       static_cast<int32_t>(rec[4])};
  }
  return cloud;
}

void write_poses_csv(const std::string& path,
                     const std::vector<double>& timestamps,
                     const std::vector<Pose2D>& poses,
                     const std::string& header) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << header << "\n";
  char line[160];
  for (size_t i = 0; i < poses.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f,%.9f,%.9f,%.9f", timestamps[i],
                  poses[i].x, poses[i].y, poses[i].theta);
    os << line << "\n";
  }
}

void read_poses_csv(const std::string& path, std::vector<double>& timestamps,
                    std::vector<Pose2D>& poses) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  timestamps.clear();
  poses.clear();
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double t, x, y, th;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &y, &th) != 4)
      throw IoError("bad CSV line in " + path + ": " + line);
    timestamps.push_back(t);
    poses.emplace_back(x, y, th);
  }
}

void write_run_dataset(const std::string& dir, const RunDataset& run) {
  fs::create_directories(dir + "/frames");
  write_poses_csv(dir + "/poses_gt.csv", run.timestamps, run.gt_poses,
                  "t,x,y,theta");
  write_poses_csv(dir + "/odometry.csv", run.timestamps, run.odometry,
                  "t,dx,dy,dtheta");
  for (size_t i = 0; i < run.size(); ++i)
    write_point_cloud(frame_path(dir, i), run.frame(i));
}

RunDataset open_run_dataset(const std::string& dir) {
  RunDataset run;
  read_poses_csv(dir + "/poses_gt.csv", run.timestamps, run.gt_poses);
  std::vector<double> ts2;
  read_poses_csv(dir + "/odometry.csv", ts2, run.odometry);
  if (run.odometry.size() != run.gt_poses.size())
    throw IoError("pose/odometry length mismatch in " + dir);
  run.dir = dir;
  run.on_disk = true;
  return run;
}

PointCloud RunDataset::frame(size_t i) const {
  if (on_disk) return read_point_cloud(frame_path(dir, i));
  return frames[i];
}

}  // namespace topoloc
