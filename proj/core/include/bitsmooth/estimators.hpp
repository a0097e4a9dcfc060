// Reference Bayesian estimators used to check the information bounds:
// Kalman filter and fixed-lag RTS smoother (exact conditional means for the
// unquantized channel), a point-mass grid filter/smoother (1-bit channel), and
// a seeded Monte Carlo harness measuring empirical MSE against 1/J.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bitsmooth/model.hpp"
#include "bitsmooth/qfim.hpp"

namespace bitsmooth {

// -- simulation ----------------------------------------------------------------

/// Simulated trajectories. states[t][k] for k = 0..horizon; observations[t][k]
/// for k = 1..horizon (entry 0 is NaN: no measurement in block 0).
struct TrajectoryBatch {
    std::uint64_t seed = 0;
    std::int64_t num_trials = 0;
    std::int64_t horizon = 0;
    MeasurementChannel channel = MeasurementChannel::Unquantized;
    std::vector<std::vector<double>> states;
    std::vector<std::vector<double>> observations;
};

/// One SplitMix64 step from state x: adds 0x9e3779b97f4a7c15, then mixes.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of trial t's generator: output t+1 of a SplitMix64 stream whose state
/// starts at `seed`, i.e. splitmix64(seed + t * 0x9e3779b97f4a7c15).
/// Each trial runs its own std::mt19937_64 and draws, in order, theta_0 then
/// (z_k, eta_k) for k = 1..horizon from boost::random::normal_distribution.
std::uint64_t trial_stream_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

/// Deterministic in (model, channel, seed, num_trials, horizon); the thread
/// count does not change the result.
TrajectoryBatch simulate(const GaussMarkovModel& model, MeasurementChannel channel,
                         std::uint64_t seed, std::int64_t num_trials, std::int64_t horizon,
                         unsigned threads = 1);

// -- Kalman / RTS -------------------------------------------------------------

/// Data-independent error variances of the scalar Kalman filter, k = 0..horizon.
/// predicted[0] = filtered[0] = sigma0^2.
struct KalmanVariances {
    std::vector<double> predicted;
    std::vector<double> filtered;
};
KalmanVariances kalman_variances(const GaussMarkovModel& model, std::int64_t horizon);

struct KalmanOutput {
    KalmanVariances variances;
    std::vector<std::vector<double>> mean;            // [trial][k], k = 0..K
    std::vector<std::vector<double>> predicted_mean;  // [trial][k]
};

/// Requires an Unquantized batch (throws std::invalid_argument otherwise).
KalmanOutput kalman_filter(const TrajectoryBatch& batch, const GaussMarkovModel& model);

/// Fixed-lag RTS: block l is estimated from measurements up to l + lag, for
/// l = 0..K-lag. lag = 0 reproduces the filter.
struct SmootherOutput {
    std::int64_t lag = 0;
    std::vector<double> variance;            // [l]
    std::vector<std::vector<double>> mean;   // [trial][l]
};
std::vector<double> rts_variances(const KalmanVariances& filter, const GaussMarkovModel& model,
                                  std::int64_t lag);
SmootherOutput rts_smoother(const KalmanOutput& filter, const GaussMarkovModel& model,
                            std::int64_t lag);

/// Steady-state Kalman posterior variance (Riccati fixed point).
double steady_kalman_variance(const GaussMarkovModel& model);

// -- grid (point-mass) estimators --------------------------------------------

struct GridSpec {
    std::int64_t num_points = 2000;
    /// Half-width in multiples of max(sigma0, sigma_inf) (sigma0 alone when
    /// |alpha| = 1), widened by |mu0|. The grid is centered at 0.
    double half_width = 8.0;
    /// Posterior windows are trimmed where mass < tolerance * max mass.
    double prune_tolerance = 1e-20;

    void validate() const;
};

struct GridMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Contiguous window [first, first + mass.size()) of grid masses; zero elsewhere.
struct GridWindow {
    std::int64_t first = 0;
    std::vector<double> mass;
};

/// Per-trial filter output kept for smoothing. predicted[0] mirrors posterior[0].
struct GridTrack {
    std::vector<GridWindow> posterior;
    std::vector<GridWindow> predicted;
    std::vector<GridMoments> moments;
};

class GridFilter {
public:
    GridFilter(const GaussMarkovModel& model, MeasurementChannel channel, GridSpec spec = {});

    /// observations[k] for k = 1..K (entry 0 ignored). Throws GridDegeneracy
    /// if the posterior loses all its mass.
    GridTrack run(std::span<const double> observations) const;

    /// Moments of p(theta_l | Y_{l+lag}) for l = last, last - stride, ... >= 0
    /// with last = K - lag; returned in increasing block order along with the
    /// block indices. lag = 0 returns the filter moments.
    std::vector<GridMoments> smooth(const GridTrack& track, std::int64_t lag,
                                    std::int64_t stride, std::vector<std::int64_t>* blocks) const;

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    double spacing() const noexcept { return spacing_; }

private:
    void predict(const GridWindow& posterior, GridWindow& out) const;
    GridMoments moments(const GridWindow& w) const;
    void trim(GridWindow& w) const;

    GaussMarkovModel model_;
    MeasurementChannel channel_;
    GridSpec spec_;
    std::vector<double> nodes_;
    double spacing_ = 0.0;
    // Banded transition kernel, one column per source node.
    std::vector<std::int64_t> kernel_first_;
    std::vector<std::int64_t> kernel_offset_;
    std::vector<std::int64_t> kernel_length_;
    std::vector<double> kernel_;
    std::vector<double> lik_plus_;   // P(r = +1 | theta_i), OneBit only
    std::vector<double> lik_minus_;  // P(r = -1 | theta_i)
};

struct GridBatchResult {
    std::vector<std::vector<GridMoments>> moments;  // [trial][k]
};

GridBatchResult grid_filter(const TrajectoryBatch& batch, const GaussMarkovModel& model,
                            const GridSpec& grid = {}, unsigned threads = 1);

/// Fixed-lag grid smoothing for one trial; see GridFilter::smooth.
std::vector<GridMoments> grid_smoother(const GridFilter& filter, const GridTrack& track,
                                       std::int64_t lag, std::int64_t stride = 1,
                                       std::vector<std::int64_t>* blocks = nullptr);

// -- Monte Carlo harness -------------------------------------------------------

enum class EstimatorKind { Kalman, Grid };

struct MonteCarloConfig {
    std::uint64_t seed = 1;
    std::int64_t trials = 2000;
    std::int64_t horizon = 500;
    std::int64_t lag = 50;
    /// Smoother evaluation stride; 0 picks 1 for Kalman and max(1, lag/2) for grid.
    std::int64_t smoother_stride = 0;
    GridSpec grid{};
    QuadratureSpec quadrature{};
    unsigned threads = 1;
};

struct BlockStat {
    std::int64_t block = 0;
    double mse = 0.0;
    double se = 0.0;     // NaN when trials == 1
    double bound = 0.0;  // 1/J at the same block (and lag)
};

/// Statistics over the post-burn-in window: the per-trial time average of the
/// squared error, then mean and standard error across trials.
struct WindowStat {
    std::int64_t first_block = 0;
    std::int64_t last_block = 0;
    std::int64_t blocks = 0;
    double mse = 0.0;
    double se = 0.0;
    double bound_steady = 0.0;   // 1/J in steady state (lag -> infinity for the smoother)
    double bound_matched = 0.0;  // mean of the per-block bounds over the window
};

struct MseReport {
    MeasurementChannel channel = MeasurementChannel::Unquantized;
    EstimatorKind estimator = EstimatorKind::Kalman;
    std::int64_t trials = 0;
    std::int64_t horizon = 0;
    std::int64_t lag = 0;
    std::int64_t burn_in = 0;
    bool se_defined = false;
    std::vector<BlockStat> filter;    // blocks 1..K
    std::vector<BlockStat> smoother;  // evaluated blocks
    WindowStat steady_filter;
    WindowStat steady_smoother;
};

/// ceil(10 / (1 - alpha^2)) capped at horizon / 2 (horizon / 2 for |alpha| = 1).
std::int64_t burn_in_blocks(const GaussMarkovModel& model, std::int64_t horizon);

/// One-sided z threshold that keeps the family-wise false-alarm rate of `tests`
/// simultaneous comparisons at `tail` (Bonferroni). tests = 1 and the default
/// tail give the usual 3 standard errors.
double family_wise_z(std::size_t tests, double tail = 0.0013498980316301);

/// Requires horizon > burn-in + lag. Kalman needs the Unquantized channel.
MseReport monte_carlo_mse(const GaussMarkovModel& model, MeasurementChannel channel,
                          EstimatorKind estimator, const MonteCarloConfig& config);

}  // namespace bitsmooth
