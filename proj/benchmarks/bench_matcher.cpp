#include <benchmark/benchmark.h>

#include "oblimatch/descriptor_field.hpp"
#include "oblimatch/matcher.hpp"
#include "oblimatch/random.hpp"
#include "oblimatch/scene.hpp"

namespace {

struct PipelineFixture {
  oblimatch::ScenePair scene;
  oblimatch::DescriptorGrid grid_a, grid_b;
  oblimatch::KeypointSet kps_a, kps_b;
};

PipelineFixture make_fixture(int points, int dim) {
  oblimatch::SceneConfig config;
  config.num_points = points;
  config.image_size = {320, 240};
  config.focal = 260.0;
  PipelineFixture f;
  f.scene = oblimatch::synth_scene(config, 7);
  std::tie(f.grid_a, f.grid_b) = oblimatch::oracle_grids(f.scene, dim, 0.05, 8);
  std::tie(f.kps_a, f.kps_b) = oblimatch::co_visible_keypoints(f.scene);
  return f;
}

void BM_MatchPairPassthrough(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)), 64);
  oblimatch::MatcherConfig config;
  config.passthrough = true;
  config.match_threshold = 0.0;
  for (auto _ : state) {
    auto result = oblimatch::match_pair(f.kps_a, f.kps_b, f.grid_a, f.grid_b,
                                        oblimatch::MatcherWeights{}, config);
    benchmark::DoNotOptimize(result.matches.data());
  }
}
BENCHMARK(BM_MatchPairPassthrough)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_MatchPairAttention(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)), 64);
  oblimatch::MatcherConfig config;
  config.dim = 64;
  config.num_layers = 6;
  config.num_heads = 4;
  const oblimatch::MatcherWeights weights = oblimatch::random_weights(config, 9);
  for (auto _ : state) {
    auto result = oblimatch::match_pair(f.kps_a, f.kps_b, f.grid_a, f.grid_b, weights, config);
    benchmark::DoNotOptimize(result.matches.data());
  }
}
BENCHMARK(BM_MatchPairAttention)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SampleDescriptors(benchmark::State& state) {
  const auto f = make_fixture(256, 64);
  for (auto _ : state) {
    auto descs = oblimatch::sample_descriptors(f.grid_a, f.kps_a);
    benchmark::DoNotOptimize(descs.descs.data());
  }
}
BENCHMARK(BM_SampleDescriptors)->Unit(benchmark::kMicrosecond);

}  // namespace
