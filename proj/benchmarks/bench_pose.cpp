#include <benchmark/benchmark.h>

#include "oblimatch/descriptor_field.hpp"
#include "oblimatch/pose_estimation.hpp"
#include "oblimatch/random.hpp"
#include "oblimatch/scene.hpp"

namespace {

struct RansacFixture {
  oblimatch::ScenePair scene;
  oblimatch::KeypointSet kps_a, kps_b;
  oblimatch::MatchList matches;
};

RansacFixture make_fixture(double outlier_fraction) {
  oblimatch::SceneConfig config;
  config.num_points = 200;
  config.image_size = {640, 480};
  config.focal = 800.0;
  RansacFixture f;
  f.scene = oblimatch::synth_scene(config, 11);
  std::tie(f.kps_a, f.kps_b) = oblimatch::co_visible_keypoints(f.scene);
  oblimatch::Rng rng(12);
  for (auto& p : f.kps_a.coords) p += 0.5 * Eigen::Vector2d(rng.normal(), rng.normal());
  for (auto& p : f.kps_b.coords) p += 0.5 * Eigen::Vector2d(rng.normal(), rng.normal());
  const int n = static_cast<int>(f.kps_b.coords.size());
  const int outliers = static_cast<int>(outlier_fraction * n);
  for (int i = 0; i < outliers; ++i) {
    f.kps_b.coords[static_cast<std::size_t>(i)] =
        f.kps_b.coords[static_cast<std::size_t>(rng.uniform_int(n))];
  }
  for (int i = 0; i < n; ++i) f.matches.push_back({i, i, 1.0});
  return f;
}

void BM_RansacEssential(benchmark::State& state) {
  const auto f = make_fixture(static_cast<double>(state.range(0)) / 100.0);
  oblimatch::RansacConfig config;
  config.seed = 3;
  for (auto _ : state) {
    auto estimate = oblimatch::ransac_essential(f.matches, f.kps_a, f.kps_b,
                                                f.scene.intrinsics_a, f.scene.intrinsics_b,
                                                config);
    benchmark::DoNotOptimize(estimate.num_inliers);
  }
}
BENCHMARK(BM_RansacEssential)->Arg(0)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_EightPoint(benchmark::State& state) {
  const auto f = make_fixture(0.0);
  std::vector<Eigen::Vector2d> na, nb;
  for (std::size_t i = 0; i < f.kps_a.coords.size(); ++i) {
    na.push_back(oblimatch::normalize_pixel(f.kps_a.coords[i], f.scene.intrinsics_a));
    nb.push_back(oblimatch::normalize_pixel(f.kps_b.coords[i], f.scene.intrinsics_b));
  }
  for (auto _ : state) {
    auto e = oblimatch::eight_point(na, nb);
    benchmark::DoNotOptimize(e.m.data());
  }
}
BENCHMARK(BM_EightPoint)->Unit(benchmark::kMicrosecond);

}  // namespace
