#include "topoloc/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "topoloc/config.hpp"
#include "topoloc/dataset_io.hpp"
#include "topoloc/errors.hpp"
#include "topoloc/evaluation.hpp"
#include "topoloc/localizer.hpp"
#include "topoloc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace topoloc {

namespace {

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 0;
  bool has_seed = false;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg =
      opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
  if (opts.has_seed) {
    cfg.seed = opts.seed;
    cfg.matcher.seed = opts.seed;
  }
  return cfg;
}

std::unique_ptr<PlaceEncoder> make_encoder(const RunConfig& cfg) {
  if (cfg.encoder == "files")
    return std::make_unique<FileDescriptorEncoder>(cfg.descriptor_dir,
                                                   cfg.place.dim);
  return std::make_unique<PolarSpectrumEncoder>(cfg.place);
}

void log_config(const RunConfig& cfg, const std::string& what) {
  std::cerr << "[topoloc] " << what << " (seed " << cfg.seed << ")\n";
}

std::vector<Pose2D> resolve_trajectory(const RunConfig& cfg,
                                       const std::string& trajectory,
                                       const std::string& waypoint_file,
                                       double step) {
  if (!waypoint_file.empty()) {
    std::ifstream is(waypoint_file);
    if (!is) throw IoError("cannot read waypoints " + waypoint_file);
    std::vector<Eigen::Vector2d> wp;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      double x, y;
      if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2)
        throw IoError("bad waypoint line: " + line);
      wp.emplace_back(x, y);
    }
    return trajectory_from_waypoints(wp, step);
  }
  if (trajectory != "loop")
    throw UsageError("trajectory must be 'loop' or a waypoint file");
  const double B = cfg.world.block_size;
  const double bx = cfg.world.blocks_x, by = cfg.world.blocks_y;
  Eigen::Vector2d lo(B, B), hi((bx - 1) * B, (by - 1) * B);
  if (bx < 2 || by < 2) {
    lo = {0.0, 0.0};
    hi = {bx * B, by * B};
  }
  return rectangle_loop(lo, hi, step);
}

int cmd_simulate(const CommonOpts& common, const std::string& out_dir,
                 const std::string& trajectory,
                 const std::string& waypoint_file, double step,
                 bool noiseless) {
  RunConfig cfg = resolve_config(common);
  log_config(cfg, "simulate -> " + out_dir);
  const World world = generate_world(cfg.seed, cfg.world);
  const std::vector<Pose2D> traj =
      resolve_trajectory(cfg, trajectory, waypoint_file, step);
  OdomNoise noise = cfg.noise;
  LidarModel lidar = cfg.lidar;
  if (noiseless) {
    noise = {0.0, 0.0, 0.0};
    lidar.range_sigma = 0.0;
  }
  const RunDataset run = simulate_run(world, traj, lidar, noise, cfg.seed);
  write_run_dataset(out_dir, run);
  std::cout << "wrote " << run.size() << " frames to " << out_dir << "\n";
  return 0;
}

int cmd_build_map(const CommonOpts& common, const std::string& dataset_dir,
                  const std::string& out_dir) {
  RunConfig cfg = resolve_config(common);
  log_config(cfg, "build-map " + dataset_dir + " -> " + out_dir);
  const RunDataset run = open_run_dataset(dataset_dir);
  const auto encoder = make_encoder(cfg);
  const TopoMap map = build_map(run, cfg.map_build(), *encoder);
  save_map(map, out_dir);
  std::cout << "map with " << map.locations.size() << " locations, "
            << map.edges.size() << " edges -> " << out_dir << "\n";
  return 0;
}

int cmd_localize(const CommonOpts& common, const std::string& dataset_dir,
                 const std::string& map_dir, const std::string& out_csv) {
  RunConfig cfg = resolve_config(common);
  log_config(cfg, "localize " + dataset_dir + " against " + map_dir);
  const RunDataset run = open_run_dataset(dataset_dir);
  if (run.size() == 0) throw EmptyRun("dataset has no frames");
  const TopoMap map = load_map(map_dir, cfg.grid.d_max);
  const auto encoder = make_encoder(cfg);

  Localizer loc(map, *encoder, cfg.localizer, cfg.grid, cfg.curb,
                cfg.features, cfg.matcher, cfg.seed);
  loc.initialize_from_pose(run.gt_poses.front());

  std::ofstream os(out_csv);
  if (!os) throw IoError("cannot write " + out_csv);
  os << "t,x,y,theta,v_cur,lost\n";
  char line[200];
  for (size_t t = 0; t < run.size(); ++t) {
    const Pose2D est = loc.step(run.frame(t), run.odometry[t]);
    std::snprintf(line, sizeof(line), "%.6f,%.9f,%.9f,%.9f,%d,%d",
                  run.timestamps[t], est.x, est.y, est.theta,
                  loc.state().v_cur, loc.state().lost ? 1 : 0);
    os << line << "\n";
  }
  std::cout << "wrote " << run.size() << " estimates to " << out_csv << "\n";
  return 0;
}

int cmd_evaluate(const std::string& est_csv, const std::string& gt_csv,
                 double threshold, const std::string& out_json,
                 const std::string& per_step_csv) {
  std::vector<double> est_ts, gt_ts;
  std::vector<Pose2D> est, gt;
  read_poses_csv(est_csv, est_ts, est);
  read_poses_csv(gt_csv, gt_ts, gt);
  const TrajectoryPair tp =
      associate_by_timestamp(est_ts, est, gt_ts, gt, 0.1);
  const std::vector<double> errors = ate_errors(tp);
  const auto [mean, median] = ate_stats(errors);
  const double sr = sr_loc(errors, threshold);

  json j;
  j["steps"] = errors.size();
  j["mean_ate"] = mean;
  j["median_ate"] = median;
  j["threshold"] = threshold;
  j["sr_loc"] = sr;
  if (!out_json.empty()) {
    std::ofstream os(out_json);
    if (!os) throw IoError("cannot write " + out_json);
    os << j.dump(2) << "\n";
  }
  if (!per_step_csv.empty()) {
    std::ofstream os(per_step_csv);
    if (!os) throw IoError("cannot write " + per_step_csv);
    os << "t,error\n";
    for (size_t i = 0; i < errors.size(); ++i)
      os << tp.timestamps[i] << "," << errors[i] << "\n";
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_match(const CommonOpts& common, const std::string& ref_path,
              const std::string& cand_path, const std::string& out_json,
              const std::string& guess_str) {
  RunConfig cfg = resolve_config(common);
  log_config(cfg, "match " + ref_path + " vs " + cand_path);
  const PointCloud ref_cloud = read_point_cloud(ref_path);
  const PointCloud cand_cloud = read_point_cloud(cand_path);
  RecordOptions ref_opts;
  ref_opts.with_distance_maps = false;
  const ScanRecord ref = build_scan_record(
      ref_cloud, cfg.grid, cfg.curb, cfg.features, ref_opts, cfg.seed);
  const ScanRecord cand = build_scan_record(
      cand_cloud, cfg.grid, cfg.curb, cfg.features, RecordOptions{},
      mix64(cfg.seed, 1));

  std::optional<Pose2D> guess;
  if (!guess_str.empty()) {
    double x, y, th;
    if (std::sscanf(guess_str.c_str(), "%lf,%lf,%lf", &x, &y, &th) != 3)
      throw UsageError("--guess expects x,y,theta");
    guess = Pose2D(x, y, th);
  }

  const auto& rf = cfg.matcher.kind == FeatureKind::OrientedBinary
                       ? ref.features_global
                       : ref.features_edge;
  const auto& cf = cfg.matcher.kind == FeatureKind::OrientedBinary
                       ? cand.features_global
                       : cand.features_edge;
  const auto corr = match_features(rf, cf, cfg.matcher.ratio_max);

  json j;
  j["correspondences"] = json::array();
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pts;
  for (const Correspondence& m : corr) {
    const Eigen::Vector2d r = feature_point(ref.grid, rf[m.ref_idx]);
    const Eigen::Vector2d c = feature_point(cand.grid, cf[m.cand_idx]);
    pts.emplace_back(r, c);
    j["correspondences"].push_back({{"ref", {r.x(), r.y()}},
                                    {"cand", {c.x(), c.y()}},
                                    {"dist", m.dist}});
  }
  const auto init = estimate_initial_transform(
      pts, cfg.matcher.inlier_tol_cells * cfg.grid.resolution,
      cfg.matcher.min_inliers, cfg.matcher.consensus_iters, cfg.seed);
  if (init)
    j["initial_transform"] = {{"x", init->pose.x},
                              {"y", init->pose.y},
                              {"theta", init->pose.theta},
                              {"inliers", init->inliers.size()}};
  else
    j["initial_transform"] = nullptr;

  const MatchResult result = match_scans(ref, cand, guess, cfg.matcher);
  j["result"] = {{"x", result.X.x},
                 {"y", result.X.y},
                 {"theta", result.X.theta},
                 {"success", result.success},
                 {"iou", result.iou},
                 {"inliers", result.inliers},
                 {"final_cost", result.final_cost},
                 {"used_fallback", result.used_fallback}};

  if (!out_json.empty()) {
    std::ofstream os(out_json);
    if (!os) throw IoError("cannot write " + out_json);
    os << j.dump(2) << "\n";
  }
  std::cout << j["result"].dump(2) << "\n";
  return 0;
}

int cmd_curbs(const CommonOpts& common, const std::string& cloud_path,
              const std::string& out_csv, const std::string& mask_path) {
  RunConfig cfg = resolve_config(common);
  log_config(cfg, "curbs " + cloud_path);
  const PointCloud cloud = read_point_cloud(cloud_path);
  CurbDebug debug;
  const std::vector<Point> curbs =
      detect_curbs(cloud, cfg.curb, cfg.seed, &debug);

  std::ofstream os(out_csv);
  if (!os) throw IoError("cannot write " + out_csv);
  os << "x,y,z\n";
  char line[120];
  for (const Point& p : curbs) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f", p.x, p.y, p.z);
    os << line << "\n";
  }
  std::cout << "wrote " << curbs.size() << " curb points to " << out_csv
            << "\n";

  if (!mask_path.empty()) {
    std::ofstream ms(mask_path, std::ios::binary);
    if (!ms) throw IoError("cannot write " + mask_path);
    ms << "P5\n" << debug.cols << " " << debug.rows << "\n255\n";
    std::vector<uint8_t> img(debug.ground_mask.size());
    for (size_t i = 0; i < img.size(); ++i)
      img[i] = debug.edge_mask[i]     ? 255
               : debug.ground_mask[i] ? 150
               : debug.exclusion_mask[i] ? 60
                                         : 0;
    ms.write(reinterpret_cast<const char*>(img.data()),
             static_cast<std::streamsize>(img.size()));
  }
  return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  CLI::App app{"topological-map LiDAR localization toolkit"};
  app.require_subcommand(1);

  CommonOpts common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "config file (INI)");
    sub->add_option("--seed", common.seed, "override the config seed")
        ->each([&](const std::string&) { common.has_seed = true; });
  };

  std::string out_dir, dataset_dir, map_dir, out_csv, est_csv, gt_csv;
  std::string out_json, per_step_csv, ref_path, cand_path, guess_str;
  std::string cloud_path, mask_path, trajectory = "loop", waypoint_file;
  double step = 0.5, threshold = 10.0;
  bool noiseless = false;

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic run");
  add_common(sim);
  sim->add_option("--out", out_dir, "output dataset directory")->required();
  sim->add_option("--trajectory", trajectory, "loop (built-in)");
  sim->add_option("--waypoints", waypoint_file, "waypoint CSV (x,y)");
  sim->add_option("--step", step, "trajectory step, m");
  sim->add_flag("--noiseless", noiseless, "disable odometry and range noise");

  CLI::App* bm = app.add_subcommand("build-map", "build a map from a run");
  add_common(bm);
  bm->add_option("--dataset", dataset_dir, "dataset directory")->required();
  bm->add_option("--out", map_dir, "output map directory")->required();

  CLI::App* lc = app.add_subcommand("localize", "localize a run in a map");
  add_common(lc);
  lc->add_option("--dataset", dataset_dir, "dataset directory")->required();
  lc->add_option("--map", map_dir, "map directory")->required();
  lc->add_option("--out", out_csv, "estimated poses CSV")->required();

  CLI::App* ev = app.add_subcommand("evaluate", "trajectory error metrics");
  ev->add_option("--estimated", est_csv, "estimated poses CSV")->required();
  ev->add_option("--ground-truth", gt_csv, "ground-truth poses CSV")
      ->required();
  ev->add_option("--threshold", threshold, "success-rate threshold, m");
  ev->add_option("--out-json", out_json, "metrics JSON path");
  ev->add_option("--per-step", per_step_csv, "per-step error CSV path");

  CLI::App* mt = app.add_subcommand("match", "match two scans (debug)");
  add_common(mt);
  mt->add_option("--ref", ref_path, "reference cloud (.bin)")->required();
  mt->add_option("--cand", cand_path, "candidate cloud (.bin)")->required();
  mt->add_option("--out-json", out_json, "debug JSON path");
  mt->add_option("--guess", guess_str, "initial guess x,y,theta");

  CLI::App* cb = app.add_subcommand("curbs", "detect curbs in a cloud");
  add_common(cb);
  cb->add_option("--cloud", cloud_path, "point cloud (.bin)")->required();
  cb->add_option("--out-csv", out_csv, "curb points CSV")->required();
  cb->add_option("--mask", mask_path, "debug mask image (PGM)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(common, out_dir, trajectory, waypoint_file, step,
                          noiseless);
    if (bm->parsed()) return cmd_build_map(common, dataset_dir, map_dir);
    if (lc->parsed()) return cmd_localize(common, dataset_dir, map_dir,
                                          out_csv);
    if (ev->parsed())
      return cmd_evaluate(est_csv, gt_csv, threshold, out_json, per_step_csv);
    if (mt->parsed())
      return cmd_match(common, ref_path, cand_path, out_json, guess_str);
    if (cb->parsed()) return cmd_curbs(common, cloud_path, out_csv, mask_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace topoloc
