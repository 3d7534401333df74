// Benchmark comparing the OpenMP kernels against their serial references:
// distance transform, scan simulation, factor accumulation, corner
// response, range-window filter.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "topoloc/curb_detector.hpp"
#include "topoloc/distance_map.hpp"
#include "topoloc/features.hpp"
#include "topoloc/grid_builder.hpp"
#include "topoloc/parallel.hpp"
#include "topoloc/record_builder.hpp"
#include "topoloc/rng.hpp"
#include "topoloc/scan_matcher.hpp"
#include "topoloc/sim.hpp"

using namespace topoloc;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  fn();  // warmup
  std::vector<double> samples;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", max_threads());
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "openmp",
              "speedup");

  WorldParams wp;
  const World world = generate_world(7, wp);
  const LidarModel lidar;
  const Pose2D pose(90.0, 60.0, 0.3);

  report("simulate_scan",
         time_ms([&] { serial::simulate_scan(world, pose, lidar, 1); }, 9),
         time_ms([&] { simulate_scan(world, pose, lidar, 1); }, 9));

  const PointCloud cloud = simulate_scan(world, pose, lidar, 1);
  const GridConfig gcfg;
  const CurbParams ccfg;
  ScanRecord rec = project_cloud(cloud, detect_curbs(cloud, ccfg, 1), gcfg);

  report("distance_transform",
         time_ms([&] {
           serial::distance_transform(rec.grid, CellClass::Wall, gcfg.d_max);
         }, 9),
         time_ms([&] {
           distance_transform(rec.grid, CellClass::Wall, gcfg.d_max);
         }, 9));

  build_distance_maps(rec, gcfg.d_max);
  FactorSet fs;
  fs.wall_points = &rec.wall_points;
  fs.wall_dmap = &rec.wall_dmap;
  fs.curb_points = &rec.curb_points;
  fs.curb_dmap = &rec.curb_dmap;
  const FactorWeights weights;
  const Pose2D X(0.4, -0.2, 0.05);
  report("accumulate_factors",
         time_ms([&] {
           for (int i = 0; i < 50; ++i)
             serial::accumulate_factors(X, fs, weights);
         }, 9),
         time_ms([&] {
           for (int i = 0; i < 50; ++i) accumulate_factors(X, fs, weights);
         }, 9));

  const ImageU8 img = render_grid(rec.grid);
  report("corner_response",
         time_ms([&] { serial::corner_response(img); }, 9),
         time_ms([&] { corner_response(img); }, 9));

  const RangeImage ri = RangeImage::from_cloud(cloud);
  report("range_window_filter",
         time_ms([&] {
           for (int i = 0; i < 20; ++i)
             serial::range_std_window_filter(ri, ccfg);
         }, 9),
         time_ms([&] {
           for (int i = 0; i < 20; ++i) range_std_window_filter(ri, ccfg);
         }, 9));

  return 0;
}
