#include "trc/fsc_engine.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

const trc::Fsc two_state = trc::make_two_state_bsc_fsc(0.01, 0.01, 0.1, true);
const trc::InputDistribution uniform2 = trc::InputDistribution::uniform(2);

// One log-domain chain of length n.
void BM_LogChain(benchmark::State& state) {
  const auto b = trc::build_bhatt_matrices(two_state);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<trc::Symbol> x(n), x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = i % 2;
    x2[i] = (i / 3) % 2;
  }
  for (auto _ : state) benchmark::DoNotOptimize(trc::log_chain(b, x, x2));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogChain)->Arg(200)->Arg(5000);

void BM_SampleChains(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(trc::sample_log_chains(two_state, uniform2, 200, 10000, 1, trc::StartState::averaged(), 1));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SampleChains)->Unit(benchmark::kMillisecond);

void BM_FxExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(trc::fx_n_state_known(two_state, uniform2, 2.0, n));
}
BENCHMARK(BM_FxExact)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

} // namespace
