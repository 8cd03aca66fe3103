#include <benchmark/benchmark.h>

#include "ghostdet/dataset.hpp"
#include "ghostdet/ghost.hpp"
#include "ghostdet/spectral.hpp"

namespace {

void BM_Featurize266(benchmark::State& state) {
  const auto patch = ghostdet::synth_ground_image(266, 1.5, 2);
  for (auto _ : state) {
    auto f = ghostdet::featurize(patch);
    benchmark::DoNotOptimize(f.values.data());
  }
}
BENCHMARK(BM_Featurize266)->Unit(benchmark::kMillisecond);

void BM_SynthGround532(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto img = ghostdet::synth_ground_image(532, 1.5, seed++);
    benchmark::DoNotOptimize(img.pixels().data());
  }
}
BENCHMARK(BM_SynthGround532)->Unit(benchmark::kMillisecond);

void BM_FeaturizeImage(benchmark::State& state) {
  const auto img = ghostdet::synth_ground_image(532, 1.5, 3);
  const auto jobs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto samples = ghostdet::featurize_image(img, 266, jobs);
    benchmark::DoNotOptimize(samples.data());
  }
}
BENCHMARK(BM_FeaturizeImage)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
