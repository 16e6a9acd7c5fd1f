#include "trc/concentration.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_ExactMl(benchmark::State& state) {
  const auto bsc = trc::make_bsc(0.1);
  const auto spec = trc::EnsembleSpec::iid(trc::InputDistribution::uniform(2));
  const auto n = static_cast<std::size_t>(state.range(0));
  trc::ExperimentConfig c{bsc, spec};
  c.n = n;
  c.m = 4;
  std::size_t t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trc::codebook_error_probs(c, t++, 1, 1));
}
BENCHMARK(BM_ExactMl)->Arg(6)->Arg(10)->Arg(14);

} // namespace
BENCHMARK_MAIN();
