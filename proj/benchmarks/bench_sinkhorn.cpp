#include <benchmark/benchmark.h>

#include "oblimatch/matcher.hpp"
#include "oblimatch/random.hpp"

namespace {

Eigen::MatrixXd random_scores(int n, std::uint64_t seed) {
  oblimatch::Rng rng(seed);
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s(i, j) = rng.uniform(-1, 1);
  return s;
}

void BM_Sinkhorn(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd scores = random_scores(n, 1);
  for (auto _ : state) {
    auto out = oblimatch::sinkhorn(scores, 0.5, 100);
    benchmark::DoNotOptimize(out.p.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_ExtractMatches(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto assignment = oblimatch::sinkhorn(random_scores(n, 2), 0.5, 100);
  for (auto _ : state) {
    auto matches = oblimatch::extract_matches(assignment, 0.2);
    benchmark::DoNotOptimize(matches.data());
  }
}
BENCHMARK(BM_ExtractMatches)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMicrosecond);

}  // namespace
