#include <benchmark/benchmark.h>

#include "kylesim/market.hpp"
#include "kylesim/scenario_io.hpp"

using namespace kylesim;

namespace {

Scenario bench_scenario() {
    return parse_scenario(R"([model]
rule = "kimura"
P0 = 0.4
C = 1
gamma = -1
[insider]
strategy = "kimura_bridge"
[mc]
paths = 4000
steps = 200
seed = 1
)");
}

void bm_simulate_serial(benchmark::State& state) {
    const Scenario sc = bench_scenario();
    for (auto _ : state) benchmark::DoNotOptimize(simulate_serial(sc).summary.mean_W);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sc.mc.paths));
}

void bm_simulate_parallel(benchmark::State& state) {
    const Scenario sc = bench_scenario();
    SimOptions opt;
    opt.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(sc, opt).summary.mean_W);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sc.mc.paths));
}

}  // namespace

BENCHMARK(bm_simulate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_simulate_parallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
