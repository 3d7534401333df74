#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topoloc/curb_detector.hpp"
#include "topoloc/place_recognition.hpp"
#include "topoloc/record_builder.hpp"
#include "topoloc/sim.hpp"

namespace topoloc {

struct Location {
  int32_t id = -1;
  Pose2D pose;  // first-run ground truth, world frame
  ScanRecord rec;
  PlaceDescriptor descriptor;
};

struct Edge {
  int32_t i = -1, j = -1;
  Pose2D rel;  // between(pose_i, pose_j)
};

// Graph of locations. Edges link locations not further than edge_radius
// apart and are stored once; adjacency serves both directions with the
// inverse relative pose.
struct TopoMap {
  std::vector<Location> locations;
  std::vector<Edge> edges;

  void build_adjacency();
  const std::vector<std::pair<int32_t, Pose2D>>& neighbors(int32_t v) const;
  std::vector<PlaceDescriptor> descriptor_index() const;
  int32_t nearest_location(const Pose2D& p) const;

 private:
  std::vector<std::vector<std::pair<int32_t, Pose2D>>> adj_;
};

struct MapBuildConfig {
  double node_spacing = 5.0;
  double edge_radius = 5.0;
  GridConfig grid;
  CurbParams curb;
  FeatureConfig features;
  uint64_t seed = 0;
};

// Frame indices that become locations: the first frame plus every frame at
// least node_spacing away from all previously selected ones.
std::vector<size_t> select_nodes(const std::vector<Pose2D>& poses,
                                 double node_spacing);

TopoMap build_map(const std::vector<PointCloud>& clouds,
                  const std::vector<Pose2D>& poses, const MapBuildConfig& cfg,
                  const PlaceEncoder& encoder);
TopoMap build_map(const RunDataset& run, const MapBuildConfig& cfg,
                  const PlaceEncoder& encoder);

// Map directory: map.json (poses, edges, metadata) + locations/NNNNNN.loc
// blobs. Loading rebuilds the derived per-location data (wall/curb point
// lists and distance maps). Corruption anywhere raises CorruptMap.
void save_map(const TopoMap& map, const std::string& dir);
TopoMap load_map(const std::string& dir, double d_max = 5.0);

}  // namespace topoloc
