#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "bitsmooth/bim.hpp"
#include "bitsmooth/errors.hpp"
#include "bitsmooth/estimators.hpp"
#include "bitsmooth/steady.hpp"

using namespace bitsmooth;

namespace {

GaussMarkovModel make(double alpha, double sigma_z = 1.0, double sigma_eta = 1.0,
                      double sigma0 = 1.0) {
    GaussMarkovModel m;
    m.alpha = alpha;
    m.sigma_z = sigma_z;
    m.sigma_eta = sigma_eta;
    m.sigma0 = sigma0;
    return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Mean of theta given sign(theta + eta) = +1 for theta, eta ~ N(0, 1), by
// rejection sampling. Returns {mean, standard error}.
std::pair<double, double> rejection_posterior_mean(std::size_t samples) {
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> n01;
    double sum = 0, sum2 = 0;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double theta = n01(rng), eta = n01(rng);
        if (theta + eta < 0.0) continue;
        sum += theta;
        sum2 += theta * theta;
        ++accepted;
    }
    const double mean = sum / accepted;
    const double var = sum2 / accepted - mean * mean;
    return {mean, std::sqrt(var / accepted)};
}

}  // namespace

TEST(Simulate, DeterministicAndThreadInvariant) {
    const auto m = make(0.9, 0.5);
    const auto a = simulate(m, MeasurementChannel::OneBit, 42, 16, 30, 1);
    const auto b = simulate(m, MeasurementChannel::OneBit, 42, 16, 30, 4);
    EXPECT_EQ(a.states, b.states);
    ASSERT_EQ(a.observations.size(), 16u);
    for (std::size_t t = 0; t < 16; ++t) {
        EXPECT_TRUE(std::isnan(a.observations[t][0]));
        EXPECT_TRUE(std::isnan(b.observations[t][0]));
        for (std::size_t k = 1; k <= 30; ++k) {
            EXPECT_EQ(a.observations[t][k], b.observations[t][k]);
            EXPECT_TRUE(a.observations[t][k] == 1.0 || a.observations[t][k] == -1.0);
        }
    }
    const auto c = simulate(m, MeasurementChannel::OneBit, 43, 16, 30, 1);
    EXPECT_NE(a.states, c.states);
}

TEST(Simulate, TrialStreamsFollowDocumentedSplitting) {
    EXPECT_EQ(trial_stream_seed(7, 0), splitmix64(7));
    EXPECT_EQ(trial_stream_seed(7, 3), splitmix64(7 + 3 * 0x9e3779b97f4a7c15ULL));
    // First two outputs of the reference SplitMix64 generator seeded with 0.
    EXPECT_EQ(trial_stream_seed(0, 0), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(trial_stream_seed(0, 1), 0x6e789e6aa1b965f4ULL);
    // A trial's path does not depend on how many trials are drawn.
    const auto m = make(0.7);
    const auto small = simulate(m, MeasurementChannel::Unquantized, 9, 2, 10);
    const auto large = simulate(m, MeasurementChannel::Unquantized, 9, 50, 10);
    EXPECT_EQ(small.states[1], large.states[1]);
}

TEST(Simulate, MarginalVarianceMatchesClosedForm) {
    const auto m = make(0.9, 0.6, 1.0, 1.5);
    const auto batch = simulate(m, MeasurementChannel::Unquantized, 5, 100000, 10);
    double sum = 0, sum2 = 0;
    for (const auto& s : batch.states) {
        sum += s[10];
        sum2 += s[10] * s[10];
    }
    const double n = 100000.0;
    const double mean = sum / n;
    const double var = (sum2 - n * mean * mean) / (n - 1);
    const double expected = state_moments(m, 10).variance;
    // Var of the sample variance of a Gaussian: 2 sigma^4 / (n - 1).
    const double se = expected * std::sqrt(2.0 / (n - 1));
    EXPECT_LT(std::abs(var - expected), 3 * se);
}

TEST(Simulate, RejectsBadArguments) {
    EXPECT_THROW(simulate(make(1.0, 0.0), MeasurementChannel::Unquantized, 1, 1, 1), std::invalid_argument);
    EXPECT_THROW(simulate(make(0.5), MeasurementChannel::Unquantized, 1, 0, 1), std::invalid_argument);
}

TEST(Kalman, SingleBlockPosterior) {
    // With alpha = 0 and sigma_z = 1, block 1 has a unit prior and one unit
    // measurement.
    const auto v = kalman_variances(make(0.0), 1);
    EXPECT_EQ(v.filtered[0], 1.0);
    EXPECT_DOUBLE_EQ(v.filtered[1], 0.5);
}

TEST(Kalman, UninformativeMeasurementsKeepPriorVariance) {
    const auto m = make(0.9, 0.5, 1e8, 2.0);
    const auto v = kalman_variances(m, 20);
    for (std::int64_t k = 0; k <= 20; ++k)
        EXPECT_LT(rel(v.filtered[k], state_moments(m, k).variance), 1e-12);
}

TEST(Kalman, SteadyVarianceIsInverseSteadyBim) {
    const auto m = make(1.0);
    EXPECT_NEAR(steady_kalman_variance(m), (std::sqrt(5.0) - 1) / 2, 1e-12);
    EXPECT_LT(rel(steady_kalman_variance(m),
                  1.0 / steady_filter_bim(m, MeasurementChannel::Unquantized).value),
              1e-9);
    const auto v = kalman_variances(m, 200);
    EXPECT_NEAR(v.filtered[200], (std::sqrt(5.0) - 1) / 2, 1e-12);
}

TEST(Kalman, VariancesMatchBimSequence) {
    const auto m = model_at_snr(make(0.999), -10.0);
    const auto v = kalman_variances(m, 500);
    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 500);
    for (std::int64_t k = 0; k <= 500; k += 25) EXPECT_LT(rel(v.filtered[k], 1.0 / seq.scalar_at(k)), 1e-9);
}

TEST(Kalman, RejectsOneBitBatch) {
    const auto batch = simulate(make(0.5), MeasurementChannel::OneBit, 1, 2, 5);
    EXPECT_THROW(kalman_filter(batch, make(0.5)), std::invalid_argument);
}

TEST(Rts, ZeroLagIsFilter) {
    const auto m = make(0.8, 0.4, 0.9);
    const auto batch = simulate(m, MeasurementChannel::Unquantized, 3, 4, 40);
    const auto kf = kalman_filter(batch, m);
    const auto s = rts_smoother(kf, m, 0);
    for (std::int64_t l = 0; l <= 40; ++l) {
        EXPECT_EQ(s.variance[l], kf.variances.filtered[l]);
        for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(s.mean[t][l], kf.mean[t][l]);
    }
    EXPECT_THROW(rts_smoother(kf, m, 41), std::invalid_argument);
}

TEST(Rts, GoldenRatioLimit) {
    const auto m = make(1.0);
    const auto v = rts_variances(kalman_variances(m, 400), m, 200);
    EXPECT_NEAR(v[150], 1.0 / std::sqrt(5.0), 1e-12);
}

TEST(Rts, MemorylessProcessIsNotSmoothed) {
    const auto m = make(0.0, 0.8, 0.6);
    const auto kv = kalman_variances(m, 30);
    for (std::int64_t lag : {1, 5, 20}) {
        const auto v = rts_variances(kv, m, lag);
        for (std::int64_t l = 0; l + lag <= 30; ++l) EXPECT_DOUBLE_EQ(v[l], kv.filtered[l]);
    }
}

TEST(Rts, SteadyVarianceMatchesSmoothingBound) {
    for (double alpha : {0.9, 0.999}) {
        const auto m = model_at_snr(make(alpha), -10.0);
        const std::int64_t half = 20000;
        const auto v = rts_variances(kalman_variances(m, 2 * half), m, half);
        const double j = steady_filter_bim(m, MeasurementChannel::Unquantized).value;
        const double kappa = steady_smoothing_gain(m, MeasurementChannel::Unquantized).value;
        EXPECT_LT(rel(v[half], 1.0 / (j + kappa)), 1e-6) << alpha;
    }
}

TEST(Rts, MatchesFiniteLagBound) {
    const auto m = model_at_snr(make(0.99), 0.0);
    const auto kv = kalman_variances(m, 120);
    const auto seq = filter_bim_sequence(m, MeasurementChannel::Unquantized, 120);
    const auto fims = expected_fim_sequence(m, MeasurementChannel::Unquantized, 120);
    const auto v = rts_variances(kv, m, 20);
    for (std::int64_t l = 0; l <= 100; l += 10) {
        const auto g = smoothing_gain(transition_info(m), std::span<const double>(fims), l, l + 20);
        EXPECT_LT(rel(v[l], 1.0 / smooth_bim_compact(seq, g)(0, 0)), 1e-9) << l;
    }
}

TEST(Grid, UnquantizedMatchesKalman) {
    const auto m = make(0.95, 0.3, 1.0);
    const auto batch = simulate(m, MeasurementChannel::Unquantized, 11, 3, 50);
    const auto kf = kalman_filter(batch, m);
    const auto grid = grid_filter(batch, m);
    double worst_mean = 0, worst_var = 0;
    for (std::size_t t = 0; t < 3; ++t)
        for (std::int64_t k = 0; k <= 50; ++k) {
            worst_mean = std::max(worst_mean, std::abs(grid.moments[t][k].mean - kf.mean[t][k]));
            worst_var = std::max(worst_var,
                                 std::abs(grid.moments[t][k].variance - kf.variances.filtered[k]));
        }
    EXPECT_LT(worst_mean, 1e-3 * m.sigma_eta);
    EXPECT_LT(worst_var, 1e-3 * m.sigma_eta * m.sigma_eta);
}

TEST(Grid, UnquantizedSmootherMatchesRts) {
    const auto m = make(0.95, 0.3, 1.0);
    const auto batch = simulate(m, MeasurementChannel::Unquantized, 12, 2, 60);
    const auto kf = kalman_filter(batch, m);
    const GridFilter filter(m, MeasurementChannel::Unquantized);
    for (std::int64_t lag : {0, 1, 10}) {
        const auto rts = rts_smoother(kf, m, lag);
        for (std::size_t t = 0; t < 2; ++t) {
            const auto track = filter.run(batch.observations[t]);
            std::vector<std::int64_t> blocks;
            const auto sm = grid_smoother(filter, track, lag, 1, &blocks);
            ASSERT_EQ(blocks.size(), static_cast<std::size_t>(60 - lag + 1));
            for (std::size_t i = 0; i < blocks.size(); ++i) {
                const auto l = blocks[i];
                EXPECT_EQ(l, static_cast<std::int64_t>(i));
                EXPECT_LT(std::abs(sm[i].variance - rts.variance[l]), 1e-3);
                EXPECT_LT(std::abs(sm[i].mean - rts.mean[t][l]), 1e-3);
                if (lag == 0) EXPECT_EQ(sm[i].mean, track.moments[l].mean);
            }
        }
    }
}

TEST(Grid, OneBitSingleBlockPosteriorMean) {
    const auto [oracle_mean, oracle_se] = rejection_posterior_mean(1000000);
    EXPECT_NEAR(oracle_mean, 1.0 / std::sqrt(std::numbers::pi), 4 * oracle_se);

    // alpha = 0, sigma_z = 1 makes theta_1 ~ N(0, 1) a priori.
    const GridFilter filter(make(0.0, 1.0, 1.0, 1.0), MeasurementChannel::OneBit);
    const std::vector<double> obs = {std::nan(""), 1.0};
    const auto track = filter.run(obs);
    EXPECT_NEAR(track.moments[1].mean, oracle_mean, 4 * oracle_se);
    EXPECT_NEAR(track.moments[1].mean, 1.0 / std::sqrt(std::numbers::pi), 1e-6);
}

TEST(Grid, SignSymmetry) {
    const auto m = make(0.9, 0.5, 0.8);
    const GridFilter filter(m, MeasurementChannel::OneBit);
    const auto batch = simulate(m, MeasurementChannel::OneBit, 8, 1, 40);
    std::vector<double> neg = batch.observations[0];
    for (std::size_t k = 1; k < neg.size(); ++k) neg[k] = -neg[k];
    const auto a = filter.run(batch.observations[0]);
    const auto b = filter.run(neg);
    for (std::int64_t k = 0; k <= 40; ++k) {
        EXPECT_NEAR(a.moments[k].mean, -b.moments[k].mean, 1e-12);
        EXPECT_NEAR(a.moments[k].variance, b.moments[k].variance, 1e-12);
    }
}

TEST(Grid, SpecValidation) {
    GridSpec s;
    EXPECT_NO_THROW(s.validate());
    s.num_points = 32;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.num_points = 200000;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Grid, DegenerateGridIsReported) {
    // A 1-bit measurement whose likelihood underflows on the whole window.
    GaussMarkovModel m = make(0.9, 1e-3, 1e-3, 1e-2);
    m.mu0 = -5.0;
    const GridFilter filter(m, MeasurementChannel::OneBit);
    const std::vector<double> obs = {std::nan(""), 1.0};
    EXPECT_THROW(filter.run(obs), GridDegeneracy);
}

TEST(Grid, ResolutionConvergence) {
    const auto m = model_at_snr(make(0.999), -10.0);
    MonteCarloConfig cfg;
    cfg.trials = 100;
    cfg.horizon = 300;
    cfg.lag = 20;
    cfg.grid.num_points = 1000;
    const auto coarse = monte_carlo_mse(m, MeasurementChannel::OneBit, EstimatorKind::Grid, cfg);
    cfg.grid.num_points = 2000;
    const auto fine = monte_carlo_mse(m, MeasurementChannel::OneBit, EstimatorKind::Grid, cfg);
    EXPECT_LT(rel(coarse.steady_filter.mse, fine.steady_filter.mse), 5e-3);
    EXPECT_LT(rel(coarse.steady_smoother.mse, fine.steady_smoother.mse), 5e-3);
}

TEST(MonteCarlo, FamilyWiseThreshold) {
    EXPECT_NEAR(family_wise_z(1), 3.0, 1e-12);
    EXPECT_NEAR(family_wise_z(400), 4.501439110816125, 1e-9);
    EXPECT_NEAR(family_wise_z(500), 4.548631411084761, 1e-9);
    EXPECT_THROW(family_wise_z(0), std::invalid_argument);
}

TEST(MonteCarlo, BurnIn) {
    EXPECT_EQ(burn_in_blocks(make(0.0), 500), 10);
    EXPECT_EQ(burn_in_blocks(make(0.999), 500), 250);
    EXPECT_EQ(burn_in_blocks(make(0.9), 500), 53);
    EXPECT_EQ(burn_in_blocks(make(1.0), 501), 250);
}

TEST(MonteCarlo, KalmanIsEfficient) {
    const auto m = model_at_snr(make(0.99), -10.0);
    MonteCarloConfig cfg;
    cfg.trials = 2000;
    cfg.horizon = 400;
    cfg.lag = 50;
    const auto r = monte_carlo_mse(m, MeasurementChannel::Unquantized, EstimatorKind::Kalman, cfg);
    EXPECT_TRUE(r.se_defined);
    EXPECT_LT(std::abs(r.steady_filter.mse - r.steady_filter.bound_steady), 3 * r.steady_filter.se);
    EXPECT_LT(std::abs(r.steady_smoother.mse - r.steady_smoother.bound_matched),
              3 * r.steady_smoother.se);
    const double z = family_wise_z(r.filter.size());
    for (const auto& b : r.filter) EXPECT_GE(b.mse + z * b.se, b.bound) << b.block;
    ASSERT_EQ(r.smoother.size(), static_cast<std::size_t>(400 - 50 + 1));
}

TEST(MonteCarlo, OneBitGridRespectsBoundsAndSmoothingHelps) {
    const auto m = model_at_snr(make(0.99), -10.0);
    MonteCarloConfig cfg;
    cfg.trials = 300;
    cfg.horizon = 300;
    cfg.lag = 20;
    const auto r = monte_carlo_mse(m, MeasurementChannel::OneBit, EstimatorKind::Grid, cfg);
    EXPECT_GE(r.steady_filter.mse + 3 * r.steady_filter.se, r.steady_filter.bound_steady);
    EXPECT_GE(r.steady_smoother.mse + 3 * r.steady_smoother.se, r.steady_smoother.bound_matched);
    const double zf = family_wise_z(r.filter.size());
    const double zs = family_wise_z(r.smoother.size());
    for (const auto& b : r.filter) EXPECT_GE(b.mse + zf * b.se, b.bound) << b.block;
    for (const auto& b : r.smoother) {
        EXPECT_GE(b.mse + zs * b.se, b.bound) << b.block;
        if (b.block < 1) continue;
        const auto& f = r.filter[b.block - 1];
        EXPECT_LE(b.mse, f.mse + 2 * std::hypot(b.se, f.se)) << b.block;
    }
}

TEST(MonteCarlo, SingleTrialHasUndefinedErrors) {
    MonteCarloConfig cfg;
    cfg.trials = 1;
    cfg.horizon = 100;
    cfg.lag = 5;
    const auto r =
        monte_carlo_mse(make(0.9), MeasurementChannel::Unquantized, EstimatorKind::Kalman, cfg);
    EXPECT_FALSE(r.se_defined);
    EXPECT_TRUE(std::isnan(r.steady_filter.se));
    EXPECT_TRUE(std::isfinite(r.steady_filter.mse));
    EXPECT_GE(r.steady_filter.mse, 0.0);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
    const auto m = model_at_snr(make(0.95), -5.0);
    MonteCarloConfig cfg;
    cfg.trials = 24;
    cfg.horizon = 120;
    cfg.lag = 8;
    cfg.threads = 1;
    const auto a = monte_carlo_mse(m, MeasurementChannel::OneBit, EstimatorKind::Grid, cfg);
    cfg.threads = 3;
    const auto b = monte_carlo_mse(m, MeasurementChannel::OneBit, EstimatorKind::Grid, cfg);
    ASSERT_EQ(a.filter.size(), b.filter.size());
    for (std::size_t i = 0; i < a.filter.size(); ++i) {
        EXPECT_EQ(a.filter[i].mse, b.filter[i].mse);
        EXPECT_EQ(a.filter[i].se, b.filter[i].se);
    }
    for (std::size_t i = 0; i < a.smoother.size(); ++i) EXPECT_EQ(a.smoother[i].mse, b.smoother[i].mse);
    EXPECT_EQ(a.steady_smoother.mse, b.steady_smoother.mse);
}

TEST(MonteCarlo, RejectsBadConfigurations) {
    MonteCarloConfig cfg;
    cfg.horizon = 20;
    cfg.lag = 15;
    EXPECT_THROW(monte_carlo_mse(make(0.9), MeasurementChannel::Unquantized, EstimatorKind::Kalman, cfg),
                 std::invalid_argument);
    cfg.horizon = 200;
    EXPECT_THROW(monte_carlo_mse(make(0.9), MeasurementChannel::OneBit, EstimatorKind::Kalman, cfg),
                 std::invalid_argument);
}
