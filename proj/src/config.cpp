#include "topoloc/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "topoloc/errors.hpp"

namespace topoloc {

MapBuildConfig RunConfig::map_build() const {
  MapBuildConfig cfg;
  cfg.node_spacing = node_spacing;
  cfg.edge_radius = edge_radius;
  cfg.grid = grid;
  cfg.curb = curb;
  cfg.features = features;
  cfg.seed = seed;
  return cfg;
}

namespace {

struct Key {
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

double to_double(const std::string& v) {
  size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw InvalidParams("bad number: " + v);
  return x;
}

int to_int(const std::string& v) {
  size_t pos = 0;
  const int x = std::stoi(v, &pos);
  if (pos != v.size()) throw InvalidParams("bad integer: " + v);
  return x;
}

uint64_t to_u64(const std::string& v) {
  size_t pos = 0;
  const uint64_t x = std::stoull(v, &pos);
  if (pos != v.size()) throw InvalidParams("bad integer: " + v);
  return x;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(item));
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + fmt(v[i]);
  return out;
}

#define KEY_D(section, name, field, doc_)                                 \
  {                                                                       \
    {section, name},                                                      \
    {                                                                     \
      doc_, [](const RunConfig& c) { return fmt(c.field); },              \
          [](RunConfig& c, const std::string& v) { c.field = to_double(v); } \
    }                                                                     \
  }
#define KEY_I(section, name, field, doc_)                                 \
  {                                                                       \
    {section, name},                                                      \
    {                                                                     \
      doc_, [](const RunConfig& c) { return std::to_string(c.field); },   \
          [](RunConfig& c, const std::string& v) { c.field = to_int(v); } \
    }                                                                     \
  }

const std::map<std::pair<std::string, std::string>, Key>& registry() {
  static const std::map<std::pair<std::string, std::string>, Key> reg = {
      {{"run", "seed"},
       {"master seed for every stochastic stage",
        [](const RunConfig& c) { return std::to_string(c.seed); },
        [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }}},
      {{"run", "encoder"},
       {"place encoder: polar (built-in) or files (precomputed)",
        [](const RunConfig& c) { return c.encoder; },
        [](RunConfig& c, const std::string& v) {
          if (v != "polar" && v != "files")
            throw InvalidParams("encoder must be polar or files");
          c.encoder = v;
        }}},
      {{"run", "descriptor_dir"},
       {"directory of NNNNNN.desc files for the files encoder",
        [](const RunConfig& c) { return c.descriptor_dir; },
        [](RunConfig& c, const std::string& v) { c.descriptor_dir = v; }}},

      KEY_D("grid", "resolution", grid.resolution, "m per cell"),
      KEY_D("grid", "extent", grid.extent, "grid side length, m"),
      KEY_D("grid", "wall_zmin", grid.wall_zmin, "wall height band lower bound, m"),
      KEY_D("grid", "wall_zmax", grid.wall_zmax, "wall height band upper bound, m"),
      KEY_I("grid", "min_hits", grid.min_hits, "returns per cell to call it a wall"),
      KEY_D("grid", "d_max", grid.d_max, "distance map truncation, m"),

      KEY_I("curb", "std_window", curb.std_window, "azimuth variance window, bins"),
      KEY_D("curb", "sigma_threshold", curb.sigma_threshold, "range variance bound, m^2"),
      KEY_D("curb", "sigma_y", curb.sigma_y, "center-line sampling weight, m"),
      KEY_I("curb", "sample_n", curb.sample_n, "plane-fit sample size"),
      KEY_D("curb", "d_threshold", curb.d_threshold, "RANSAC inlier distance, m"),
      KEY_I("curb", "ransac_iters", curb.ransac_iters, "RANSAC iterations"),
      KEY_D("curb", "curb_height", curb.curb_height, "ground mask height bound, m"),
      KEY_I("curb", "upsample_factor", curb.upsample_factor, "range-image row upsampling"),
      KEY_I("curb", "dilate_w", curb.dilate_w, "exclusion dilation width, azimuth bins"),
      KEY_I("curb", "dilate_h", curb.dilate_h, "exclusion dilation height, rows"),
      KEY_D("curb", "edge_range_gap", curb.edge_range_gap, "max neighbor range gap at an edge, m"),

      KEY_I("features", "max_global", features.max_global, "oriented-binary feature cap"),
      KEY_I("features", "max_edge", features.max_edge, "corner-patch feature cap"),

      {{"matcher", "funnel"},
       {"outlier thresholds per stage, m",
        [](const RunConfig& c) { return fmt_list(c.matcher.funnel); },
        [](RunConfig& c, const std::string& v) {
          c.matcher.funnel = to_list(v);
          if (c.matcher.funnel.empty())
            throw InvalidParams("funnel must be non-empty");
        }}},
      KEY_I("matcher", "iters_per_stage", matcher.iters_per_stage, "Gauss-Newton iterations per funnel stage"),
      KEY_I("matcher", "fallback_iters", matcher.fallback_iters, "wall-only fallback iterations"),
      KEY_D("matcher", "iou_min", matcher.iou_min, "IOU acceptance gate"),
      KEY_I("matcher", "min_inliers", matcher.min_inliers, "surviving correspondences for success"),
      KEY_D("matcher", "lambda0", matcher.lambda0, "initial damping"),
      KEY_D("matcher", "omega_f", matcher.weights.omega_f, "feature factor weight"),
      KEY_D("matcher", "omega_w", matcher.weights.omega_w, "wall factor weight"),
      KEY_D("matcher", "omega_c", matcher.weights.omega_c, "curb factor weight"),
      KEY_D("matcher", "ratio_max", matcher.ratio_max, "descriptor ratio-test bound"),
      KEY_D("matcher", "inlier_tol_cells", matcher.inlier_tol_cells, "consensus inlier tolerance, cells"),
      KEY_I("matcher", "consensus_iters", matcher.consensus_iters, "consensus iterations"),

      KEY_D("localizer", "overlap_min", localizer.overlap_min, "scan overlap gate"),
      KEY_D("localizer", "jump_threshold", localizer.jump_threshold, "max found-vs-guess distance, m"),
      KEY_D("localizer", "fallback_radius", localizer.fallback_radius, "inside-location / branch-4 radius, m"),
      KEY_I("localizer", "top_k", localizer.top_k, "place-recognition candidates"),
      KEY_D("localizer", "sr_threshold", localizer.sr_threshold, "success-rate threshold, m"),

      KEY_D("map", "node_spacing", node_spacing, "min distance between locations, m"),
      KEY_D("map", "edge_radius", edge_radius, "max edge length, m"),

      KEY_I("lidar", "rings", lidar.rings, "ring count"),
      KEY_D("lidar", "elev_min_deg", lidar.elev_min_deg, "lowest ring elevation, deg"),
      KEY_D("lidar", "elev_max_deg", lidar.elev_max_deg, "highest ring elevation, deg"),
      KEY_I("lidar", "azimuth_bins", lidar.azimuth_bins, "azimuth bins"),
      KEY_D("lidar", "max_range", lidar.max_range, "max range, m"),
      KEY_D("lidar", "min_range", lidar.min_range, "min range, m"),
      KEY_D("lidar", "range_sigma", lidar.range_sigma, "range noise sigma, m"),
      KEY_D("lidar", "sensor_height", lidar.sensor_height, "sensor height above ground, m"),

      KEY_D("noise", "scale", noise.scale, "odometry multiplicative noise"),
      KEY_D("noise", "sigma_xy", noise.sigma_xy, "odometry additive noise, m/step"),
      KEY_D("noise", "sigma_theta", noise.sigma_theta, "odometry additive noise, rad/step"),

      KEY_I("world", "blocks_x", world.blocks_x, "city blocks in x"),
      KEY_I("world", "blocks_y", world.blocks_y, "city blocks in y"),
      KEY_D("world", "block_size", world.block_size, "road centerline pitch, m"),
      KEY_D("world", "road_halfwidth", world.road_halfwidth, "road half width, m"),
      KEY_D("world", "curb_height", world.curb_height, "sidewalk step height, m"),
      KEY_D("world", "building_margin", world.building_margin, "block edge to building, m"),
      KEY_I("world", "buildings_per_block", world.buildings_per_block, "buildings per block"),
      KEY_D("world", "building_height", world.building_height, "base building height, m"),
      KEY_I("world", "boxes", world.boxes, "1.7 m boxes next to curbs"),

      KEY_I("place", "radial_bins", place.radial_bins, "descriptor radial bins"),
      KEY_I("place", "angular_bins", place.angular_bins, "descriptor angular bins"),
      KEY_D("place", "r_max", place.r_max, "descriptor radial extent, m"),
      KEY_I("place", "dim", place.dim, "descriptor dimension"),
  };
  return reg;
}

#undef KEY_D
#undef KEY_I

void validate(const RunConfig& c) {
  if (c.grid.resolution <= 0.0 || c.grid.extent <= 0.0 ||
      c.grid.d_max <= 0.0 || c.grid.min_hits < 1)
    throw InvalidParams("grid: positive resolution/extent/d_max/min_hits");
  if (c.curb.std_window < 1 || c.curb.sigma_threshold <= 0.0 ||
      c.curb.sigma_y <= 0.0 || c.curb.sample_n < 3 ||
      c.curb.d_threshold <= 0.0 || c.curb.ransac_iters < 1 ||
      c.curb.curb_height <= 0.0 || c.curb.upsample_factor < 1 ||
      c.curb.dilate_w < 1 || c.curb.dilate_h < 1)
    throw InvalidParams("curb: all parameters must be positive");
  for (double d : c.matcher.funnel)
    if (d <= 0.0) throw InvalidParams("matcher.funnel: thresholds positive");
  if (c.matcher.iou_min <= 0.0 || c.matcher.iou_min > 1.0)
    throw InvalidParams("matcher.iou_min in (0,1]");
  if (c.matcher.weights.omega_f < 0.0 || c.matcher.weights.omega_w < 0.0 ||
      c.matcher.weights.omega_c < 0.0 ||
      (c.matcher.weights.omega_f == 0.0 && c.matcher.weights.omega_w == 0.0 &&
       c.matcher.weights.omega_c == 0.0))
    throw InvalidParams("matcher: at least one positive factor weight");
  if (c.localizer.overlap_min <= 0.0 || c.localizer.overlap_min >= 1.0)
    throw InvalidParams("localizer.overlap_min in (0,1)");
  if (c.localizer.jump_threshold <= 0.0 || c.localizer.fallback_radius <= 0.0 ||
      c.localizer.top_k < 1 || c.localizer.sr_threshold <= 0.0)
    throw InvalidParams("localizer: positive thresholds");
  if (c.node_spacing <= 0.0 || c.edge_radius <= 0.0)
    throw InvalidParams("map: positive node_spacing/edge_radius");
  if (c.lidar.rings < 1 || c.lidar.azimuth_bins < 1 ||
      c.lidar.max_range <= 0.0)
    throw InvalidParams("lidar: positive rings/azimuth_bins/max_range");
  if (c.place.radial_bins < 1 || c.place.angular_bins < 2 ||
      c.place.r_max <= 0.0 || c.place.dim < 1)
    throw InvalidParams("place: positive bins/r_max/dim");
  if (c.encoder == "files" && c.descriptor_dir.empty())
    throw InvalidParams("files encoder requires run.descriptor_dir");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    auto strip = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw InvalidParams("config line " + std::to_string(lineno) +
                            ": malformed section");
      section = strip(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidParams("config line " + std::to_string(lineno) +
                          ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    const auto it = registry().find({section, key});
    if (it == registry().end())
      throw InvalidParams("unknown config key [" + section + "] " + key);
    it->second.set(cfg, value);
  }
  validate(cfg);
  cfg.matcher.seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string default_config_text() {
  const RunConfig defaults;
  std::string out;
  std::string section;
  for (const auto& [sk, key] : registry()) {
    if (sk.first != section) {
      section = sk.first;
      if (!out.empty()) out += "\n";
      out += "[" + section + "]\n";
    }
    out += sk.second + " = " + key.get(defaults) + "  # " + key.doc + "\n";
  }
  return out;
}

}  // namespace topoloc
