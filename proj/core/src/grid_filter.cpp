#include "bitsmooth/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bitsmooth/errors.hpp"
#include "bitsmooth/parallel.hpp"

namespace bitsmooth {
namespace {

// Kernel columns extend to +-10 sigma_z around alpha * theta_j.
constexpr double kKernelSigmas = 10.0;

double normalize(GridWindow& w) {
    double sum = 0.0;
    for (double m : w.mass) sum += m;
    if (!(sum > 0.0) || !std::isfinite(sum)) return sum;
    for (double& m : w.mass) m /= sum;
    return sum;
}

}  // namespace

void GridSpec::validate() const {
    if (num_points < 64 || num_points > 100'000)
        throw std::invalid_argument("grid num_points must lie in [64, 1e5]");
    if (!(half_width > 0.0)) throw std::invalid_argument("grid half_width must be positive");
    if (!(prune_tolerance >= 0.0 && prune_tolerance < 1e-6))
        throw std::invalid_argument("grid prune_tolerance must lie in [0, 1e-6)");
}

GridFilter::GridFilter(const GaussMarkovModel& model, MeasurementChannel channel, GridSpec spec)
    : model_(model), channel_(channel), spec_(spec) {
    model_.validate();
    spec_.validate();

    const double scale = model_.stationary()
                             ? std::max(model_.sigma0, std::sqrt(stationary_variance(model_)))
                             : model_.sigma0;
    const double half = spec_.half_width * scale + std::abs(model_.mu0);
    const std::int64_t n = spec_.num_points;
    spacing_ = 2.0 * half / static_cast<double>(n - 1);
    nodes_.resize(n);
    for (std::int64_t i = 0; i < n; ++i) nodes_[i] = -half + spacing_ * static_cast<double>(i);

    const double sz = model_.sigma_z;
    const double reach = kKernelSigmas * sz;
    kernel_first_.resize(n);
    kernel_offset_.resize(n);
    kernel_length_.resize(n);
    for (std::int64_t j = 0; j < n; ++j) {
        const double target = model_.alpha * nodes_[j];
        std::int64_t lo = static_cast<std::int64_t>(std::floor((target - reach + half) / spacing_));
        std::int64_t hi = static_cast<std::int64_t>(std::ceil((target + reach + half) / spacing_));
        lo = std::clamp<std::int64_t>(lo, 0, n - 1);
        hi = std::clamp<std::int64_t>(hi, 0, n - 1);
        const std::size_t offset = kernel_.size();
        double sum = 0.0;
        for (std::int64_t i = lo; i <= hi; ++i) {
            const double d = (nodes_[i] - target) / sz;
            const double w = std::exp(-0.5 * d * d);
            kernel_.push_back(w);
            sum += w;
        }
        if (!(sum > 0.0)) {
            // Kernel narrower than the spacing: move the mass to the nearest node.
            const auto nearest = std::clamp<std::int64_t>(
                std::llround((target + half) / spacing_), 0, n - 1);
            kernel_.resize(offset);
            kernel_.push_back(1.0);
            lo = hi = nearest;
            sum = 1.0;
        }
        for (std::size_t i = offset; i < kernel_.size(); ++i) kernel_[i] /= sum;
        kernel_first_[j] = lo;
        kernel_offset_[j] = static_cast<std::int64_t>(offset);
        kernel_length_[j] = hi - lo + 1;
    }

    if (channel_ == MeasurementChannel::OneBit) {
        lik_plus_.resize(n);
        lik_minus_.resize(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const double x = nodes_[i] / model_.sigma_eta;
            lik_plus_[i] = q_function(-x);
            lik_minus_[i] = q_function(x);
        }
    }
}

void GridFilter::trim(GridWindow& w) const {
    if (w.mass.empty()) return;
    const double peak = *std::max_element(w.mass.begin(), w.mass.end());
    const double threshold = spec_.prune_tolerance * peak;
    std::size_t lo = 0, hi = w.mass.size();
    while (lo < hi && w.mass[lo] <= threshold) ++lo;
    while (hi > lo && w.mass[hi - 1] <= threshold) --hi;
    if (lo == 0 && hi == w.mass.size()) return;
    w.mass = std::vector<double>(w.mass.begin() + static_cast<std::ptrdiff_t>(lo),
                                 w.mass.begin() + static_cast<std::ptrdiff_t>(hi));
    w.first += static_cast<std::int64_t>(lo);
}

void GridFilter::predict(const GridWindow& posterior, GridWindow& out) const {
    std::int64_t lo = static_cast<std::int64_t>(nodes_.size());
    std::int64_t hi = -1;
    for (std::size_t s = 0; s < posterior.mass.size(); ++s) {
        const std::int64_t j = posterior.first + static_cast<std::int64_t>(s);
        lo = std::min(lo, kernel_first_[j]);
        hi = std::max(hi, kernel_first_[j] + kernel_length_[j] - 1);
    }
    out.first = lo;
    out.mass.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (std::size_t s = 0; s < posterior.mass.size(); ++s) {
        const double p = posterior.mass[s];
        if (p == 0.0) continue;
        const std::int64_t j = posterior.first + static_cast<std::int64_t>(s);
        const double* w = kernel_.data() + kernel_offset_[j];
        double* dst = out.mass.data() + (kernel_first_[j] - lo);
        for (std::int64_t i = 0; i < kernel_length_[j]; ++i) dst[i] += w[i] * p;
    }
}

GridMoments GridFilter::moments(const GridWindow& w) const {
    double mean = 0.0;
    for (std::size_t s = 0; s < w.mass.size(); ++s) mean += w.mass[s] * nodes_[w.first + s];
    double var = 0.0;
    for (std::size_t s = 0; s < w.mass.size(); ++s) {
        const double d = nodes_[w.first + s] - mean;
        var += w.mass[s] * d * d;
    }
    return {mean, var};
}

GridTrack GridFilter::run(std::span<const double> observations) const {
    if (observations.empty()) throw std::invalid_argument("grid filter: no observation slots");
    const std::int64_t horizon = static_cast<std::int64_t>(observations.size()) - 1;
    const std::int64_t n = static_cast<std::int64_t>(nodes_.size());

    GridTrack track;
    track.posterior.resize(horizon + 1);
    track.predicted.resize(horizon + 1);
    track.moments.resize(horizon + 1);

    GridWindow prior{0, std::vector<double>(n)};
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = (nodes_[i] - model_.mu0) / model_.sigma0;
        prior.mass[i] = std::exp(-0.5 * d * d);
    }
    if (!(normalize(prior) > 0.0)) {
        // Prior narrower than the spacing.
        const auto nearest = std::clamp<std::int64_t>(
            std::llround((model_.mu0 - nodes_.front()) / spacing_), 0, n - 1);
        prior.mass.assign(n, 0.0);
        prior.mass[nearest] = 1.0;
    }
    trim(prior);
    track.moments[0] = moments(prior);
    track.predicted[0] = prior;
    track.posterior[0] = std::move(prior);

    const double inv_r = 1.0 / (model_.sigma_eta * model_.sigma_eta);
    for (std::int64_t k = 1; k <= horizon; ++k) {
        predict(track.posterior[k - 1], track.predicted[k]);
        const GridWindow& pred = track.predicted[k];
        GridWindow post{pred.first, pred.mass};
        const double y = observations[k];
        if (channel_ == MeasurementChannel::OneBit) {
            const auto& lik = y > 0.0 ? lik_plus_ : lik_minus_;
            for (std::size_t s = 0; s < post.mass.size(); ++s) post.mass[s] *= lik[post.first + s];
        } else {
            // Log-likelihood shifted by its window maximum (closest node to y).
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < post.mass.size(); ++s)
                best = std::min(best, std::abs(nodes_[post.first + s] - y));
            for (std::size_t s = 0; s < post.mass.size(); ++s) {
                const double d = nodes_[post.first + s] - y;
                post.mass[s] *= std::exp(-0.5 * (d * d - best * best) * inv_r);
            }
        }
        if (!(normalize(post) > 0.0)) {
            throw GridDegeneracy("grid posterior lost all mass at block " + std::to_string(k) +
                                 "; widen the grid");
        }
        trim(post);
        track.moments[k] = moments(post);
        track.posterior[k] = std::move(post);
    }
    return track;
}

std::vector<GridMoments> GridFilter::smooth(const GridTrack& track, std::int64_t lag,
                                            std::int64_t stride,
                                            std::vector<std::int64_t>* blocks) const {
    const std::int64_t horizon = static_cast<std::int64_t>(track.posterior.size()) - 1;
    if (lag < 0) throw std::invalid_argument("grid smoother: lag must be >= 0");
    if (lag > horizon) throw std::invalid_argument("grid smoother: horizon too short for lag");
    if (stride < 1) throw std::invalid_argument("grid smoother: stride must be >= 1");

    std::vector<std::int64_t> targets;
    for (std::int64_t l = horizon - lag; l >= 0; l -= stride) targets.push_back(l);
    std::reverse(targets.begin(), targets.end());

    std::vector<GridMoments> out;
    out.reserve(targets.size());
    std::vector<double> ratio;
    for (std::int64_t l : targets) {
        GridWindow s = track.posterior[l + lag];
        for (std::int64_t m = l + lag - 1; m >= l; --m) {
            // s_m(j) = f_m(j) sum_i T(i|j) s_{m+1}(i) / p_{m+1}(i)
            const GridWindow& pred = track.predicted[m + 1];
            ratio.assign(s.mass.size(), 0.0);
            for (std::size_t u = 0; u < s.mass.size(); ++u) {
                const double p = pred.mass[static_cast<std::size_t>(s.first - pred.first) + u];
                ratio[u] = p > 0.0 ? s.mass[u] / p : 0.0;
            }
            const GridWindow& filt = track.posterior[m];
            GridWindow next{filt.first, std::vector<double>(filt.mass.size(), 0.0)};
            const std::int64_t s_lo = s.first;
            const std::int64_t s_hi = s.first + static_cast<std::int64_t>(s.mass.size());
            for (std::size_t v = 0; v < filt.mass.size(); ++v) {
                if (filt.mass[v] == 0.0) continue;
                const std::int64_t j = filt.first + static_cast<std::int64_t>(v);
                const std::int64_t lo = std::max(kernel_first_[j], s_lo);
                const std::int64_t hi = std::min(kernel_first_[j] + kernel_length_[j], s_hi);
                const double* w = kernel_.data() + kernel_offset_[j] + (lo - kernel_first_[j]);
                const double* r = ratio.data() + (lo - s_lo);
                double acc = 0.0;
                for (std::int64_t i = 0; i < hi - lo; ++i) acc += w[i] * r[i];
                next.mass[v] = filt.mass[v] * acc;
            }
            if (!(normalize(next) > 0.0))
                throw GridDegeneracy("grid smoother lost all mass at block " + std::to_string(m));
            trim(next);
            s = std::move(next);
        }
        out.push_back(moments(s));
    }
    if (blocks) *blocks = std::move(targets);
    return out;
}

GridBatchResult grid_filter(const TrajectoryBatch& batch, const GaussMarkovModel& model,
                            const GridSpec& grid, unsigned threads) {
    const GridFilter filter(model, batch.channel, grid);
    GridBatchResult result;
    result.moments.resize(batch.num_trials);
    parallel_for(static_cast<std::size_t>(batch.num_trials), threads, [&](std::size_t t) {
        result.moments[t] = filter.run(batch.observations[t]).moments;
    });
    return result;
}

std::vector<GridMoments> grid_smoother(const GridFilter& filter, const GridTrack& track,
                                       std::int64_t lag, std::int64_t stride,
                                       std::vector<std::int64_t>* blocks) {
    return filter.smooth(track, lag, stride, blocks);
}

}  // namespace bitsmooth
