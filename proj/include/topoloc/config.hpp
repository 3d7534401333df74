#pragma once

#include <string>

#include "topoloc/curb_detector.hpp"
#include "topoloc/grid_builder.hpp"
#include "topoloc/localizer.hpp"
#include "topoloc/place_recognition.hpp"
#include "topoloc/record_builder.hpp"
#include "topoloc/scan_matcher.hpp"
#include "topoloc/sim.hpp"
#include "topoloc/topo_map.hpp"

namespace topoloc {

// One document for every tunable in the toolkit. load_config rejects
// unknown sections/keys and validates values against the module
// preconditions; default_config_text() lists each key with its default
// and a one-line description.
struct RunConfig {
  uint64_t seed = 1;
  GridConfig grid;
  CurbParams curb;
  FeatureConfig features;
  MatcherConfig matcher;
  LocalizerConfig localizer;
  double node_spacing = 5.0;
  double edge_radius = 5.0;
  LidarModel lidar;
  OdomNoise noise;
  WorldParams world;
  PlaceConfig place;
  std::string encoder = "polar";  // "polar" | "files"
  std::string descriptor_dir;

  MapBuildConfig map_build() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
std::string default_config_text();

}  // namespace topoloc
