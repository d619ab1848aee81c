#include <benchmark/benchmark.h>

#include "fdx/classifier.hpp"
#include "fdx/pde.hpp"
#include "fdx/phase.hpp"
#include "fdx/profile.hpp"

using namespace fdx;

namespace {

const Params P0 = validate_params(0.5, 2, 3, 4.5);
const Params P1 = validate_params(0.5, 2, 1, 12);

}  // namespace

static void BM_Classify(benchmark::State& state) {
    const double A = state.range(0) ? 1e-19 : 1e-23;
    for (auto _ : state) benchmark::DoNotOptimize(classify(P0, A).cls);
}
BENCHMARK(BM_Classify)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_FindAStar(benchmark::State& state) {
    const auto [lo, hi] = seed_bracket(P0);
    for (auto _ : state) benchmark::DoNotOptimize(find_A_star(P0, lo, hi).A_star);
}
BENCHMARK(BM_FindAStar)->Unit(benchmark::kMillisecond);

static void BM_Profile(benchmark::State& state) {
    const double A = 1.0;
    const double xi_max = 1e8 * profile_scale(P0, A);
    for (auto _ : state) benchmark::DoNotOptimize(integrate_profile(P0, A, xi_max).samples.size());
}
BENCHMARK(BM_Profile)->Unit(benchmark::kMicrosecond);

static void BM_PdeStep(benchmark::State& state) {
    PdeConfig c;
    c.params = P1;
    c.n = static_cast<int>(state.range(0));
    c.R = 20.0;
    const RadialGrid g = make_grid(c);
    const PdeState s0 = initial_state(c, g);
    for (auto _ : state) benchmark::DoNotOptimize(step(c, g, s0, 1e-3).u.data());
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PdeStep)->RangeMultiplier(4)->Range(128, 8192)->Complexity(benchmark::oN)->Unit(benchmark::kMicrosecond);

static void BM_PdeRun(benchmark::State& state) {
    PdeConfig c;
    c.params = P1;
    c.n = 256;
    c.R = 20.0;
    RunOptions o;
    o.refine = false;
    for (auto _ : state) benchmark::DoNotOptimize(run_until_extinction(c, 1e-8, o).T_est);
}
BENCHMARK(BM_PdeRun)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
