#pragma once

#include <string>
#include <vector>

#include "topoloc/point_cloud.hpp"
#include "topoloc/pose2.hpp"
#include "topoloc/sim.hpp"

namespace topoloc {

// Frame files: 16-byte header (magic "TLFR", u32 version, u32 count,
// u16 rings, u16 azimuth bins) followed by count little-endian float32
// (x, y, z, ring, azimuth) records. See docs/FORMATS.md.
void write_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_point_cloud(const std::string& path);

// Dataset directory: poses_gt.csv, odometry.csv, frames/NNNNNN.bin.
void write_run_dataset(const std::string& dir, const RunDataset& run);
RunDataset open_run_dataset(const std::string& dir);

void write_poses_csv(const std::string& path,
                     const std::vector<double>& timestamps,
                     const std::vector<Pose2D>& poses,
                     const std::string& header);
void read_poses_csv(const std::string& path, std::vector<double>& timestamps,
                    std::vector<Pose2D>& poses);

}  // namespace topoloc
