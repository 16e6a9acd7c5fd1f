#include "trc/exponents.hpp"

#include <benchmark/benchmark.h>

namespace {

const trc::Dmc toy3(3, 3, {0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6});
const trc::InputDistribution uniform3 = trc::InputDistribution::uniform(3);

void BM_GallagerE0(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(trc::gallager_e0(toy3, uniform3, 0.5));
}
BENCHMARK(BM_GallagerE0);

void BM_ExIid(benchmark::State& state) {
  const double lambda = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(trc::ex_iid(toy3, uniform3, lambda));
}
BENCHMARK(BM_ExIid)->Arg(1)->Arg(8)->Arg(64);

void BM_ExCc(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(trc::ex_cc(toy3, uniform3, 2.0));
}
BENCHMARK(BM_ExCc);

void BM_TrcLowerBound(benchmark::State& state) {
  const auto spec = trc::EnsembleSpec::iid(uniform3);
  const auto horizon = trc::Horizon::asymptotic();
  const auto crit = trc::critical_rates(toy3, spec);
  for (auto _ : state) benchmark::DoNotOptimize(trc::trc_lower_bound(toy3, spec, 0.05, horizon, crit));
}
BENCHMARK(BM_TrcLowerBound)->Unit(benchmark::kMicrosecond);

} // namespace
