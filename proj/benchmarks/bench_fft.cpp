#include <benchmark/benchmark.h>

#include "ghostdet/fft.hpp"
#include "ghostdet/ghost.hpp"

namespace {

void BM_Fft1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto plan = ghostdet::fft_plan(n);
  std::vector<ghostdet::Complex> data(n, ghostdet::Complex(0.5, -0.25));
  for (auto _ : state) {
    plan->forward(data);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
// 266 = 2*7*19 (patch side), 532 = 4*7*19 (desk image), 256 pow2, 521 prime.
BENCHMARK(BM_Fft1d)->Arg(256)->Arg(266)->Arg(521)->Arg(532);

void BM_Dft2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto img = ghostdet::synth_ground_image(n, 1.5, 1);
  for (auto _ : state) {
    auto spectrum = ghostdet::dft2(img);
    benchmark::DoNotOptimize(spectrum.values.data());
  }
}
BENCHMARK(BM_Dft2)->Arg(256)->Arg(266)->Arg(532)->Unit(benchmark::kMillisecond);

}  // namespace
