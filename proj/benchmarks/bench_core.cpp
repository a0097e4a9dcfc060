#include <benchmark/benchmark.h>

#include <vector>

#include "bitsmooth/bim.hpp"
#include "bitsmooth/estimators.hpp"
#include "bitsmooth/qfim.hpp"
#include "bitsmooth/steady.hpp"

using namespace bitsmooth;

namespace {

GaussMarkovModel model(double alpha, double snr) {
    GaussMarkovModel m;
    m.alpha = alpha;
    return model_at_snr(m, snr);
}

}  // namespace

static void BM_ExpectedFqGaussHermite(benchmark::State& state) {
    const QuadratureSpec spec = QuadratureSpec::gauss_hermite(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(expected_fq({0.1, 2.0, -1}, 1.0, spec));
}
BENCHMARK(BM_ExpectedFqGaussHermite)->Arg(32)->Arg(128);

static void BM_ExpectedFqTrapezoid(benchmark::State& state) {
    const QuadratureSpec spec = QuadratureSpec::trapezoid(static_cast<int>(state.range(0)), 10.0);
    for (auto _ : state) benchmark::DoNotOptimize(expected_fq({0.1, 2.0, -1}, 1.0, spec));
}
BENCHMARK(BM_ExpectedFqTrapezoid)->Arg(2001)->Arg(100000);

static void BM_PerformanceRatios(benchmark::State& state) {
    const double snr = static_cast<double>(state.range(0));
    const GaussMarkovModel m = model(1.0 - 1e-5, snr);
    for (auto _ : state) benchmark::DoNotOptimize(performance_ratios(m));
}
BENCHMARK(BM_PerformanceRatios)->Arg(-40)->Arg(0)->Arg(10);

static void BM_FilterBimSequenceOneBit(benchmark::State& state) {
    const GaussMarkovModel m = model(0.999, -10.0);
    for (auto _ : state) {
        shared_fq_cache().clear();
        benchmark::DoNotOptimize(filter_bim_sequence(m, MeasurementChannel::OneBit, state.range(0)));
    }
}
BENCHMARK(BM_FilterBimSequenceOneBit)->Arg(500);

static void BM_SmoothBimSequence(benchmark::State& state) {
    const GaussMarkovModel m = model(0.999, -10.0);
    const auto seq = filter_bim_sequence(m, MeasurementChannel::OneBit, state.range(0));
    const auto fims = expected_fim_sequence(m, MeasurementChannel::OneBit, state.range(0));
    const auto d = transition_info(m);
    for (auto _ : state) benchmark::DoNotOptimize(smooth_bim_sequence(seq, d, fims));
}
BENCHMARK(BM_SmoothBimSequence)->Arg(500);

static void BM_KalmanTrials(benchmark::State& state) {
    const GaussMarkovModel m = model(0.999, -10.0);
    for (auto _ : state) {
        const auto batch = simulate(m, MeasurementChannel::Unquantized, 1, state.range(0), 500);
        benchmark::DoNotOptimize(kalman_filter(batch, m));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KalmanTrials)->Arg(100);

static void BM_GridFilterTrial(benchmark::State& state) {
    const GaussMarkovModel m = model(0.999, -10.0);
    GridSpec spec;
    spec.num_points = state.range(0);
    const GridFilter filter(m, MeasurementChannel::OneBit, spec);
    const auto batch = simulate(m, MeasurementChannel::OneBit, 1, 1, 500);
    for (auto _ : state) benchmark::DoNotOptimize(filter.run(batch.observations[0]));
}
BENCHMARK(BM_GridFilterTrial)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_GridSmootherTrial(benchmark::State& state) {
    const GaussMarkovModel m = model(0.999, -10.0);
    const GridFilter filter(m, MeasurementChannel::OneBit, GridSpec{});
    const auto batch = simulate(m, MeasurementChannel::OneBit, 1, 1, 500);
    const auto track = filter.run(batch.observations[0]);
    for (auto _ : state) benchmark::DoNotOptimize(grid_smoother(filter, track, 50, 25));
}
BENCHMARK(BM_GridSmootherTrial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
