#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ifl/feynman_kac.hpp"
#include "ifl/kernels.hpp"
#include "ifl/model.hpp"
#include "ifl/rng.hpp"
#include "ifl/special_functions.hpp"

namespace {

void BM_ThreefryBlock(benchmark::State& state) {
    std::uint64_t counter = 0;
    for (auto _ : state) {
        const auto block = ifl::rng::threefry2x64({counter++, 0}, {42, 7});
        benchmark::DoNotOptimize(block);
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * 16);
}
BENCHMARK(BM_ThreefryBlock);

void BM_NormalDraw(benchmark::State& state) {
    ifl::rng::CounterStream stream(1, ifl::rng::StreamPurpose::Generic, 0, 0);
    for (auto _ : state) benchmark::DoNotOptimize(stream.next_normal());
}
BENCHMARK(BM_NormalDraw);

void BM_SamplePaths(benchmark::State& state) {
    const auto n_steps = static_cast<std::size_t>(state.range(0));
    std::uint64_t replica = 0;
    for (auto _ : state) {
        const auto ens = ifl::sample_paths(2, 1, 1.0, n_steps, 9, replica++);
        benchmark::DoNotOptimize(ens.paths[0].end[0]);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 2 *
                            static_cast<std::int64_t>(n_steps));
}
BENCHMARK(BM_SamplePaths)->Arg(64)->Arg(256)->Arg(1024);

void BM_PairEnergyRiesz(benchmark::State& state) {
    const auto n_steps = static_cast<std::size_t>(state.range(0));
    const auto ens = ifl::sample_paths(2, 1, 1.0, n_steps, 11, 0);
    const auto gamma = ifl::TimeCovariance::constant(1.0);
    const auto kernel = ifl::SpaceCovariance::riesz(1, 0.5);
    for (auto _ : state) {
        const auto r = ifl::pair_energy(ens.paths[0], ens.paths[1], gamma, kernel);
        benchmark::DoNotOptimize(r.value);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n_steps * n_steps));
}
BENCHMARK(BM_PairEnergyRiesz)->Arg(64)->Arg(128)->Arg(256);

void BM_PairEnergyPowerLaw(benchmark::State& state) {
    const auto n_steps = static_cast<std::size_t>(state.range(0));
    const auto ens = ifl::sample_paths(2, 1, 1.0, n_steps, 11, 0);
    const auto gamma = ifl::TimeCovariance::power_law(0.5);
    const auto kernel = ifl::SpaceCovariance::riesz(1, 0.5);
    for (auto _ : state) {
        const auto r = ifl::pair_energy(ens.paths[0], ens.paths[1], gamma, kernel);
        benchmark::DoNotOptimize(r.value);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n_steps * n_steps));
}
BENCHMARK(BM_PairEnergyPowerLaw)->Arg(64)->Arg(128);

void BM_MomentEstimate(benchmark::State& state) {
    ifl::ModelParams m;
    m.u0 = ifl::InitialCondition::indicator_ball(1.0);
    const auto gamma = ifl::TimeCovariance::constant(1.0);
    const auto kernel = ifl::SpaceCovariance::riesz(1, 0.5);
    ifl::McParams mc;
    mc.n_rep = 100;
    mc.n_steps = static_cast<std::size_t>(state.range(0));
    mc.workers = 1;
    for (auto _ : state) {
        const auto est = ifl::moment_estimate(m, gamma, kernel, 1.0, 0.0, mc);
        benchmark::DoNotOptimize(est.value);
    }
}
BENCHMARK(BM_MomentEstimate)->Arg(32)->Arg(64);

void BM_SmallBall(benchmark::State& state) {
    for (auto _ : state) {
        const auto est = ifl::small_ball_mc(1, 1.0, 256, 200, 3, 1);
        benchmark::DoNotOptimize(est.p_hat);
    }
}
BENCHMARK(BM_SmallBall);

void BM_MittagLeffler(benchmark::State& state) {
    double z = 0.0;
    for (auto _ : state) {
        z = z < 20.0 ? z + 0.1 : 0.0;
        benchmark::DoNotOptimize(ifl::sf::mittag_leffler(0.375, z).log_value);
    }
}
BENCHMARK(BM_MittagLeffler);

void BM_BesselFirstZero(benchmark::State& state) {
    double nu = -0.5;
    for (auto _ : state) {
        nu = nu < 3.0 ? nu + 0.125 : -0.5;
        benchmark::DoNotOptimize(ifl::sf::bessel_first_zero(nu));
    }
}
BENCHMARK(BM_BesselFirstZero);

void BM_LogSumExpTree(benchmark::State& state) {
    std::vector<double> values(static_cast<std::size_t>(state.range(0)));
    ifl::rng::CounterStream stream(5, ifl::rng::StreamPurpose::Generic, 0, 1);
    for (auto& v : values) v = 200.0 * stream.next_normal();
    for (auto _ : state)
        benchmark::DoNotOptimize(ifl::log_sum_exp_tree(values));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            state.range(0));
}
BENCHMARK(BM_LogSumExpTree)->Arg(1024)->Arg(65536);

} // namespace

BENCHMARK_MAIN();
