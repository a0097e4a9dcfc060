#include "bitsmooth/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "bitsmooth/bim.hpp"
#include "bitsmooth/errors.hpp"
#include "bitsmooth/parallel.hpp"
#include "bitsmooth/steady.hpp"

namespace bitsmooth {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanSe {
    double mean;
    double se;
};

// Fixed summation order (trial index) so serial and threaded runs agree bit for bit.
template <typename Get>
MeanSe mean_and_se(std::size_t n, Get get) {
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) sum += get(t);
    const double mean = sum / static_cast<double>(n);
    if (n < 2) return {mean, kNaN};
    double ss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = get(t) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

}  // namespace

double family_wise_z(std::size_t tests, double tail) {
    if (tests == 0 || !(tail > 0.0 && tail < 0.5))
        throw std::invalid_argument("family_wise_z: need tests >= 1 and tail in (0, 0.5)");
    const boost::math::normal_distribution<double> n01;
    return boost::math::quantile(boost::math::complement(n01, tail / static_cast<double>(tests)));
}

std::int64_t burn_in_blocks(const GaussMarkovModel& model, std::int64_t horizon) {
    const std::int64_t cap = horizon / 2;
    if (!model.stationary()) return cap;
    const double blocks = std::ceil(10.0 / ((1.0 - model.alpha) * (1.0 + model.alpha)));
    return blocks >= static_cast<double>(cap) ? cap : static_cast<std::int64_t>(blocks);
}

MseReport monte_carlo_mse(const GaussMarkovModel& model, MeasurementChannel channel,
                          EstimatorKind estimator, const MonteCarloConfig& config) {
    model.validate();
    if (estimator == EstimatorKind::Kalman && channel != MeasurementChannel::Unquantized)
        throw std::invalid_argument("the Kalman estimator needs the unquantized channel");
    if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (config.lag < 0) throw std::invalid_argument("lag must be >= 0");

    const std::int64_t horizon = config.horizon;
    const std::int64_t lag = config.lag;
    const std::int64_t burn = burn_in_blocks(model, horizon);
    if (horizon <= burn + lag)
        throw std::invalid_argument("horizon must exceed burn-in + lag");

    std::int64_t stride = config.smoother_stride;
    if (stride <= 0) stride = estimator == EstimatorKind::Kalman ? 1 : std::max<std::int64_t>(1, lag / 2);

    const auto n_trials = static_cast<std::size_t>(config.trials);
    const TrajectoryBatch batch =
        simulate(model, channel, config.seed, config.trials, horizon, config.threads);

    std::vector<std::int64_t> eval_blocks;
    for (std::int64_t l = horizon - lag; l >= 0; l -= stride) eval_blocks.push_back(l);
    std::reverse(eval_blocks.begin(), eval_blocks.end());

    std::vector<std::vector<double>> filt_sq(n_trials);
    std::vector<std::vector<double>> smooth_sq(n_trials);

    if (estimator == EstimatorKind::Kalman) {
        const KalmanOutput kf = kalman_filter(batch, model);
        const SmootherOutput rts = rts_smoother(kf, model, lag);
        for (std::size_t t = 0; t < n_trials; ++t) {
            const auto& theta = batch.states[t];
            filt_sq[t].resize(horizon + 1);
            for (std::int64_t k = 0; k <= horizon; ++k) {
                const double e = kf.mean[t][k] - theta[k];
                filt_sq[t][k] = e * e;
            }
            smooth_sq[t].resize(eval_blocks.size());
            for (std::size_t e = 0; e < eval_blocks.size(); ++e) {
                const double err = rts.mean[t][eval_blocks[e]] - theta[eval_blocks[e]];
                smooth_sq[t][e] = err * err;
            }
        }
    } else {
        const GridFilter filter(model, channel, config.grid);
        parallel_for(n_trials, config.threads, [&](std::size_t t) {
            const auto& theta = batch.states[t];
            const GridTrack track = filter.run(batch.observations[t]);
            filt_sq[t].resize(horizon + 1);
            for (std::int64_t k = 0; k <= horizon; ++k) {
                const double e = track.moments[k].mean - theta[k];
                filt_sq[t][k] = e * e;
            }
            const std::vector<GridMoments> sm = filter.smooth(track, lag, stride, nullptr);
            smooth_sq[t].resize(eval_blocks.size());
            for (std::size_t e = 0; e < eval_blocks.size(); ++e) {
                const double err = sm[e].mean - theta[eval_blocks[e]];
                smooth_sq[t][e] = err * err;
            }
        });
    }

    // Bounds at matching indices.
    const BimSequence fseq = filter_bim_sequence(model, channel, horizon, config.quadrature);
    const std::vector<double> fims =
        expected_fim_sequence(model, channel, horizon, config.quadrature);
    const TransitionInfo d = transition_info(model);
    auto smoother_bound = [&](std::int64_t l) {
        if (lag == 0) return 1.0 / fseq.scalar_at(l);
        const SmoothingGain g = smoothing_gain(d, std::span<const double>(fims), l, l + lag);
        return 1.0 / smooth_bim_compact(fseq, g)(0, 0);
    };

    MseReport report;
    report.channel = channel;
    report.estimator = estimator;
    report.trials = config.trials;
    report.horizon = horizon;
    report.lag = lag;
    report.burn_in = burn;
    report.se_defined = config.trials > 1;

    report.filter.reserve(horizon);
    for (std::int64_t k = 1; k <= horizon; ++k) {
        const MeanSe s = mean_and_se(n_trials, [&](std::size_t t) { return filt_sq[t][k]; });
        report.filter.push_back({k, s.mean, s.se, 1.0 / fseq.scalar_at(k)});
    }
    std::vector<double> smooth_bounds(eval_blocks.size());
    report.smoother.reserve(eval_blocks.size());
    for (std::size_t e = 0; e < eval_blocks.size(); ++e) {
        const MeanSe s = mean_and_se(n_trials, [&](std::size_t t) { return smooth_sq[t][e]; });
        smooth_bounds[e] = smoother_bound(eval_blocks[e]);
        report.smoother.push_back({eval_blocks[e], s.mean, s.se, smooth_bounds[e]});
    }

    double steady_filter = kNaN;
    double steady_smooth = kNaN;
    try {
        const double j = steady_filter_bim(model, channel, config.quadrature).value;
        const double kappa = steady_smoothing_gain(model, channel, config.quadrature).value;
        steady_filter = 1.0 / j;
        steady_smooth = 1.0 / (j + kappa);
    } catch (const DomainError&) {
        // No stationary marginal for the 1-bit channel: leave NaN.
    }

    {
        WindowStat& w = report.steady_filter;
        w.first_block = burn;
        w.last_block = horizon;
        w.blocks = horizon - burn + 1;
        const MeanSe s = mean_and_se(n_trials, [&](std::size_t t) {
            double acc = 0.0;
            for (std::int64_t k = burn; k <= horizon; ++k) acc += filt_sq[t][k];
            return acc / static_cast<double>(w.blocks);
        });
        w.mse = s.mean;
        w.se = s.se;
        w.bound_steady = steady_filter;
        double acc = 0.0;
        for (std::int64_t k = burn; k <= horizon; ++k) acc += 1.0 / fseq.scalar_at(k);
        w.bound_matched = acc / static_cast<double>(w.blocks);
    }
    {
        WindowStat& w = report.steady_smoother;
        const auto first = std::lower_bound(eval_blocks.begin(), eval_blocks.end(), burn);
        const auto offset = static_cast<std::size_t>(first - eval_blocks.begin());
        const std::size_t count = eval_blocks.size() - offset;
        w.blocks = static_cast<std::int64_t>(count);
        w.bound_steady = steady_smooth;
        if (count > 0) {
            w.first_block = eval_blocks[offset];
            w.last_block = eval_blocks.back();
            const MeanSe s = mean_and_se(n_trials, [&](std::size_t t) {
                double acc = 0.0;
                for (std::size_t e = offset; e < eval_blocks.size(); ++e) acc += smooth_sq[t][e];
                return acc / static_cast<double>(count);
            });
            w.mse = s.mean;
            w.se = s.se;
            double acc = 0.0;
            for (std::size_t e = offset; e < eval_blocks.size(); ++e) acc += smooth_bounds[e];
            w.bound_matched = acc / static_cast<double>(count);
        } else {
            w.mse = w.se = w.bound_matched = kNaN;
        }
    }
    return report;
}

}  // namespace bitsmooth
