#include "topoloc/topo_map.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

#include <json.hpp>

#include "topoloc/errors.hpp"
#include "topoloc/parallel.hpp"
#include "topoloc/rng.hpp"
#include "topoloc/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace topoloc {

void TopoMap::build_adjacency() {
  adj_.assign(locations.size(), {});
  for (const Edge& e : edges) {
    adj_[e.i].emplace_back(e.j, e.rel);
    adj_[e.j].emplace_back(e.i, inverse(e.rel));
  }
}

const std::vector<std::pair<int32_t, Pose2D>>& TopoMap::neighbors(
    int32_t v) const {
  if (v < 0 || static_cast<size_t>(v) >= adj_.size())
    throw UnknownLocation("location id " + std::to_string(v));
  return adj_[v];
}

std::vector<PlaceDescriptor> TopoMap::descriptor_index() const {
  std::vector<PlaceDescriptor> out;
  out.reserve(locations.size());
  for (const Location& l : locations) out.push_back(l.descriptor);
  return out;
}

int32_t TopoMap::nearest_location(const Pose2D& p) const {
  int32_t best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Location& l : locations) {
    const double d = translation_distance(l.pose, p);
    if (d < best_d) {
      best_d = d;
      best = l.id;
    }
  }
  return best;
}

std::vector<size_t> select_nodes(const std::vector<Pose2D>& poses,
                                 double node_spacing) {
  if (poses.empty()) throw EmptyRun("no frames");
  std::vector<size_t> nodes = {0};
  for (size_t t = 1; t < poses.size(); ++t) {
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t n : nodes)
      dmin = std::min(dmin, translation_distance(poses[t], poses[n]));
    if (dmin >= node_spacing) nodes.push_back(t);
  }
  return nodes;
}

namespace {

TopoMap build_from_frames(const std::function<PointCloud(size_t)>& frame,
                          const std::vector<Pose2D>& poses,
                          const MapBuildConfig& cfg,
                          const PlaceEncoder& encoder) {
  const std::vector<size_t> nodes = select_nodes(poses, cfg.node_spacing);

  TopoMap map;
  map.locations.resize(nodes.size());
  RecordOptions opts;
  parallel_for(static_cast<int64_t>(nodes.size()), [&](int64_t k) {
    const size_t t = nodes[k];
    Location& loc = map.locations[k];
    loc.id = static_cast<int32_t>(k);
    loc.pose = poses[t];
    loc.rec = build_scan_record(frame(t), cfg.grid, cfg.curb, cfg.features,
                                opts, mix64(cfg.seed, 0xA0C00000ULL + k));
    loc.descriptor = encoder.encode(loc.rec, static_cast<int64_t>(t));
  });

  for (size_t i = 0; i < map.locations.size(); ++i) {
    for (size_t j = i + 1; j < map.locations.size(); ++j) {
      const Pose2D& pi = map.locations[i].pose;
      const Pose2D& pj = map.locations[j].pose;
      if (translation_distance(pi, pj) <= cfg.edge_radius)
        map.edges.push_back({static_cast<int32_t>(i), static_cast<int32_t>(j),
                             between(pi, pj)});
    }
  }
  map.build_adjacency();
  return map;
}

std::string loc_file(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "locations/%06zu.loc", i);
  return buf;
}

}  // namespace

TopoMap build_map(const std::vector<PointCloud>& clouds,
                  const std::vector<Pose2D>& poses, const MapBuildConfig& cfg,
                  const PlaceEncoder& encoder) {
  if (clouds.size() != poses.size())
    throw LengthMismatch("clouds vs poses");
  return build_from_frames([&](size_t t) { return clouds[t]; }, poses, cfg,
                           encoder);
}

TopoMap build_map(const RunDataset& run, const MapBuildConfig& cfg,
                  const PlaceEncoder& encoder) {
  return build_from_frames([&](size_t t) { return run.frame(t); },
                           run.gt_poses, cfg, encoder);
}

void save_map(const TopoMap& map, const std::string& dir) {
  fs::create_directories(dir + "/locations");
  json j;
  j["format"] = "topoloc-map";
  j["version"] = 1;
  j["descriptor_dim"] =
      map.locations.empty() ? 0 : map.locations.front().descriptor.dim();
  json jl = json::array();
  for (size_t i = 0; i < map.locations.size(); ++i) {
    const Location& l = map.locations[i];
    jl.push_back({{"id", l.id},
                  {"pose", {l.pose.x, l.pose.y, l.pose.theta}},
                  {"file", loc_file(i)}});
    write_location_blob(dir + "/" + loc_file(i), l.rec, l.descriptor);
  }
  j["locations"] = std::move(jl);
  json je = json::array();
  for (const Edge& e : map.edges)
    je.push_back({e.i, e.j, e.rel.x, e.rel.y, e.rel.theta});
  j["edges"] = std::move(je);

  std::ofstream os(dir + "/map.json");
  if (!os) throw IoError("cannot write " + dir + "/map.json");
  os << j.dump(2) << "\n";
}

TopoMap load_map(const std::string& dir, double d_max) {
  std::ifstream is(dir + "/map.json");
  if (!is) throw CorruptMap("missing map.json in " + dir);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw CorruptMap(std::string("unparsable map.json: ") + e.what());
  }
  TopoMap map;
  try {
    if (j.at("format") != "topoloc-map" || j.at("version") != 1)
      throw CorruptMap("unknown map format/version");
    for (const json& jl : j.at("locations")) {
      Location loc;
      loc.id = jl.at("id");
      const auto& p = jl.at("pose");
      loc.pose = Pose2D(p.at(0), p.at(1), p.at(2));
      read_location_blob(dir + "/" + jl.at("file").get<std::string>(),
                         loc.rec, loc.descriptor);
      loc.rec.wall_points = loc.rec.grid.cell_centers(CellClass::Wall);
      loc.rec.curb_points = loc.rec.grid.cell_centers(CellClass::Curb);
      map.locations.push_back(std::move(loc));
    }
    for (const json& je : j.at("edges")) {
      Edge e;
      e.i = je.at(0);
      e.j = je.at(1);
      e.rel = Pose2D(je.at(2), je.at(3), je.at(4));
      if (e.i < 0 || e.j < 0 ||
          static_cast<size_t>(e.i) >= map.locations.size() ||
          static_cast<size_t>(e.j) >= map.locations.size())
        throw CorruptMap("edge references unknown location");
      map.edges.push_back(e);
    }
  } catch (const json::exception& e) {
    throw CorruptMap(std::string("malformed map.json: ") + e.what());
  }

  parallel_for(static_cast<int64_t>(map.locations.size()), [&](int64_t i) {
    build_distance_maps(map.locations[i].rec, d_max);
  });
  map.build_adjacency();
  return map;
}

}  // namespace topoloc
