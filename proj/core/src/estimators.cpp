#include "bitsmooth/estimators.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

#include "bitsmooth/parallel.hpp"
#include "bitsmooth/steady.hpp"

namespace bitsmooth {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t trial_stream_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
    // splitmix64 adds the increment once more, so this is output t+1 of the stream.
    return splitmix64(seed + trial * 0x9e3779b97f4a7c15ull);
}

TrajectoryBatch simulate(const GaussMarkovModel& model, MeasurementChannel channel,
                         std::uint64_t seed, std::int64_t num_trials, std::int64_t horizon,
                         unsigned threads) {
    model.validate();
    if (num_trials < 1) throw std::invalid_argument("simulate: num_trials must be >= 1");
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");

    TrajectoryBatch batch;
    batch.seed = seed;
    batch.num_trials = num_trials;
    batch.horizon = horizon;
    batch.channel = channel;
    batch.states.assign(num_trials, std::vector<double>(horizon + 1));
    batch.observations.assign(num_trials, std::vector<double>(horizon + 1));

    parallel_for(static_cast<std::size_t>(num_trials), threads, [&](std::size_t t) {
        std::mt19937_64 engine(trial_stream_seed(seed, t));
        boost::random::normal_distribution<double> normal(0.0, 1.0);
        auto& theta = batch.states[t];
        auto& obs = batch.observations[t];
        theta[0] = model.mu0 + model.sigma0 * normal(engine);
        obs[0] = std::numeric_limits<double>::quiet_NaN();
        for (std::int64_t k = 1; k <= horizon; ++k) {
            const double z = model.sigma_z * normal(engine);
            const double eta = model.sigma_eta * normal(engine);
            theta[k] = model.alpha * theta[k - 1] + z;
            obs[k] = observe(channel, theta[k], eta);
        }
    });
    return batch;
}

KalmanVariances kalman_variances(const GaussMarkovModel& model, std::int64_t horizon) {
    model.validate();
    const double r = model.sigma_eta * model.sigma_eta;
    const double q = model.sigma_z * model.sigma_z;
    KalmanVariances v;
    v.predicted.resize(horizon + 1);
    v.filtered.resize(horizon + 1);
    v.predicted[0] = v.filtered[0] = model.sigma0 * model.sigma0;
    for (std::int64_t k = 1; k <= horizon; ++k) {
        const double p = model.alpha * model.alpha * v.filtered[k - 1] + q;
        v.predicted[k] = p;
        v.filtered[k] = p * r / (p + r);
    }
    return v;
}

KalmanOutput kalman_filter(const TrajectoryBatch& batch, const GaussMarkovModel& model) {
    if (batch.channel != MeasurementChannel::Unquantized)
        throw std::invalid_argument("kalman_filter needs an unquantized batch");
    KalmanOutput out;
    out.variances = kalman_variances(model, batch.horizon);
    const auto& v = out.variances;
    const double r = model.sigma_eta * model.sigma_eta;

    out.mean.assign(batch.num_trials, std::vector<double>(batch.horizon + 1));
    out.predicted_mean.assign(batch.num_trials, std::vector<double>(batch.horizon + 1));
    for (std::int64_t t = 0; t < batch.num_trials; ++t) {
        auto& m = out.mean[t];
        auto& mp = out.predicted_mean[t];
        m[0] = mp[0] = model.mu0;
        for (std::int64_t k = 1; k <= batch.horizon; ++k) {
            mp[k] = model.alpha * m[k - 1];
            const double gain = v.predicted[k] / (v.predicted[k] + r);
            m[k] = mp[k] + gain * (batch.observations[t][k] - mp[k]);
        }
    }
    return out;
}

std::vector<double> rts_variances(const KalmanVariances& filter, const GaussMarkovModel& model,
                                  std::int64_t lag) {
    const std::int64_t horizon = static_cast<std::int64_t>(filter.filtered.size()) - 1;
    if (lag < 0) throw std::invalid_argument("rts: lag must be >= 0");
    if (lag > horizon) throw std::invalid_argument("rts: horizon too short for the requested lag");

    std::vector<double> out(horizon - lag + 1);
    for (std::int64_t l = 0; l <= horizon - lag; ++l) {
        double p = filter.filtered[l + lag];
        for (std::int64_t m = l + lag - 1; m >= l; --m) {
            const double g = filter.filtered[m] * model.alpha / filter.predicted[m + 1];
            p = filter.filtered[m] + g * g * (p - filter.predicted[m + 1]);
        }
        out[l] = p;
    }
    return out;
}

SmootherOutput rts_smoother(const KalmanOutput& filter, const GaussMarkovModel& model,
                            std::int64_t lag) {
    SmootherOutput out;
    out.lag = lag;
    out.variance = rts_variances(filter.variances, model, lag);
    const auto& v = filter.variances;
    const std::int64_t last = static_cast<std::int64_t>(out.variance.size()) - 1;

    // Gains are data independent.
    std::vector<double> gain(v.filtered.size(), 0.0);
    for (std::size_t m = 0; m + 1 < v.filtered.size(); ++m)
        gain[m] = v.filtered[m] * model.alpha / v.predicted[m + 1];

    out.mean.resize(filter.mean.size());
    for (std::size_t t = 0; t < filter.mean.size(); ++t) {
        const auto& mf = filter.mean[t];
        const auto& mp = filter.predicted_mean[t];
        auto& ms = out.mean[t];
        ms.resize(last + 1);
        for (std::int64_t l = 0; l <= last; ++l) {
            double x = mf[l + lag];
            for (std::int64_t m = l + lag - 1; m >= l; --m) x = mf[m] + gain[m] * (x - mp[m + 1]);
            ms[l] = x;
        }
    }
    return out;
}

double steady_kalman_variance(const GaussMarkovModel& model) {
    model.validate();
    const double r = model.sigma_eta * model.sigma_eta;
    const double q = model.sigma_z * model.sigma_z;
    auto riccati = [&](double p) {
        const double pred = model.alpha * model.alpha * p + q;
        return pred * r / (pred + r);
    };
    const FixedPoint fp = iterate_fixed_point(riccati, model.sigma0 * model.sigma0, {});
    if (!fp.converged) throw std::runtime_error("Riccati iteration did not converge");
    return fp.value;
}

}  // namespace bitsmooth
