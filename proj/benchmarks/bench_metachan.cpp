#include <benchmark/benchmark.h>

#include <random>

#include "metachan/metastable.hpp"
#include "metachan/models.hpp"
#include "metachan/spectral.hpp"
#include "metachan/trajectory.hpp"

using namespace metachan;

namespace {

RimSpec bench_spec(int d, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Operator b(d, d), c(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            b(i, j) = Complex(dist(gen), dist(gen));
            c(i, j) = Complex(dist(gen), dist(gen));
        }
    b = ((b + b.adjoint()) / 2.0).eval();
    c = ((c + c.adjoint()) / 2.0).eval();
    b /= max_abs(b);
    c /= max_abs(c);
    return {b, c, 0.05, 1.5707963267948966, 1.0};
}

void BM_RimChannelBuild(benchmark::State& state) {
    const RimSpec spec = bench_spec(static_cast<int>(state.range(0)), 7);
    for (auto _ : state) benchmark::DoNotOptimize(rim_channel(spec));
}
BENCHMARK(BM_RimChannelBuild)->Arg(2)->Arg(4)->Arg(8);

void BM_SpectralDecompose(benchmark::State& state) {
    const RimChannel rim = rim_channel(bench_spec(static_cast<int>(state.range(0)), 8));
    for (auto _ : state) benchmark::DoNotOptimize(spectral_decompose(rim.channel.natural()));
}
BENCHMARK(BM_SpectralDecompose)->Arg(2)->Arg(4)->Arg(8);

void BM_ChannelApply(benchmark::State& state) {
    const RimChannel rim = rim_channel(bench_spec(4, 9));
    const Operator rho = identity(4) / 4.0;
    for (auto _ : state) benchmark::DoNotOptimize(rim.channel.apply(rho, state.range(0)));
}
BENCHMARK(BM_ChannelApply)->Arg(16)->Arg(256)->Arg(4096);

void BM_TrajectorySteps(benchmark::State& state) {
    const RimChannel rim = rim_channel({pauli_z(), pauli_x(), 0.05, 1.5707963267948966, 1.0});
    const Operator rho0 = identity(2) / 2.0;
    const long m = state.range(0);
    std::uint64_t idx = 0;
    for (auto _ : state) {
        PhiloxStream rng(42, idx++);
        benchmark::DoNotOptimize(sample_trajectory(rim.maps, rho0, m, rng, {}, {}, {}, false));
    }
    state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_TrajectorySteps)->Arg(100)->Arg(1000);

void BM_CommutantProjections(benchmark::State& state) {
    const RimSpec spec = bench_spec(static_cast<int>(state.range(0)), 10);
    for (auto _ : state) benchmark::DoNotOptimize(commutant_projections(spec.b, spec.c));
}
BENCHMARK(BM_CommutantProjections)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
