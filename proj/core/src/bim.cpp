#include "bitsmooth/bim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bitsmooth/errors.hpp"

namespace bitsmooth {
namespace {

InfoMatrix symmetrized(const InfoMatrix& m) { return 0.5 * (m + m.transpose()); }

// a^{-1} b through an SPD factorization; the recursions assume invertibility,
// so a failed factorization is reported rather than regularized.
InfoMatrix spd_solve(const InfoMatrix& a, const InfoMatrix& b, const char* what,
                     std::int64_t block) {
    Eigen::LLT<InfoMatrix> llt(symmetrized(a));
    if (llt.info() != Eigen::Success)
        throw NumericalDegeneracy(std::string(what) + " is not positive definite", block);
    return llt.solve(b);
}

InfoMatrix one_by_one(double v) { return InfoMatrix::Constant(1, 1, v); }

// The Gauss-Markov D-block is rank one; a determinant at rounding level is
// snapped to zero, otherwise it biases slowly contracting fixed points.
double determinant(const ScalarTransition& d) {
    const double scale = std::abs(d.d11 * d.d22) + std::abs(d.d12 * d.d21);
    const double det = d.d11 * d.d22 - d.d12 * d.d21;
    return std::abs(det) <= 16.0 * std::numeric_limits<double>::epsilon() * scale ? 0.0 : det;
}

void require_scalar_positive(double denom, const char* what, std::int64_t block) {
    if (!(denom > 0.0))
        throw NumericalDegeneracy(std::string(what) + " is not positive", block);
}

}  // namespace

const InfoMatrix& BimSequence::at(std::int64_t block) const {
    // Sequences are built contiguous in block order; fall back to a scan otherwise.
    if (!values.empty()) {
        const std::int64_t offset = block - values.front().block;
        if (offset >= 0 && offset < static_cast<std::int64_t>(values.size()) &&
            values[static_cast<std::size_t>(offset)].block == block)
            return values[static_cast<std::size_t>(offset)].info;
    }
    auto it = std::find_if(values.begin(), values.end(),
                           [block](const BimEntry& e) { return e.block == block; });
    if (it == values.end())
        throw std::out_of_range("BimSequence has no entry for block " + std::to_string(block));
    return it->info;
}

double BimSequence::scalar_at(std::int64_t block) const { return at(block)(0, 0); }

InfoMatrix filter_bim_step(const InfoMatrix& j_prev, const TransitionInfo& d,
                           const InfoMatrix& expected_fim, std::int64_t block) {
    const InfoMatrix gain = spd_solve(j_prev + d.d11, d.d12, "J_{k-1|k-1} + D11", block);
    return symmetrized(d.d22 + expected_fim - d.d21 * gain);
}

double filter_bim_step(double j_prev, const ScalarTransition& d, double expected_fim,
                       std::int64_t block) {
    const double denom = j_prev + d.d11;
    require_scalar_positive(denom, "J_{k-1|k-1} + D11", block);
    // D22 - D21 D12 / (J + D11) rewritten over the common denominator; avoids
    // cancelling two O(1/sigma_z^2) terms when alpha -> 1.
    return (d.d22 * j_prev + determinant(d)) / denom + expected_fim;
}

InfoMatrix predict_bim_step(const InfoMatrix& j_prev, const TransitionInfo& d,
                            std::int64_t block) {
    const InfoMatrix gain = spd_solve(d.d11 + j_prev, d.d12, "D11 + J_{l-1|k}", block);
    return symmetrized(d.d22 - d.d21 * gain);
}

double predict_bim_step(double j_prev, const ScalarTransition& d, std::int64_t block) {
    const double denom = d.d11 + j_prev;
    require_scalar_positive(denom, "D11 + J_{l-1|k}", block);
    return (d.d22 * j_prev + determinant(d)) / denom;
}

InfoMatrix smoothing_gain_step(const InfoMatrix& kappa_next, const TransitionInfo& d,
                               const InfoMatrix& expected_fim_next, std::int64_t block) {
    const InfoMatrix gain = spd_solve(d.d22 + expected_fim_next + kappa_next, d.d21,
                                      "D22 + E[F] + kappa", block);
    return symmetrized(d.d11 - d.d12 * gain);
}

double smoothing_gain_step(double kappa_next, const ScalarTransition& d,
                           double expected_fim_next, std::int64_t block) {
    const double denom = d.d22 + expected_fim_next + kappa_next;
    require_scalar_positive(denom, "D22 + E[F] + kappa", block);
    return (d.d11 * (expected_fim_next + kappa_next) + determinant(d)) / denom;
}

std::vector<double> expected_fim_sequence(const GaussMarkovModel& model,
                                          MeasurementChannel channel, std::int64_t horizon,
                                          const QuadratureSpec& spec) {
    model.validate();
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    std::vector<double> fims(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (std::int64_t k = 1; k <= horizon; ++k) {
        if (channel == MeasurementChannel::Unquantized) {
            fims[k] = 1.0 / (model.sigma_eta * model.sigma_eta);
        } else {
            fims[k] = shared_fq_cache()(state_moments(model, k), model.sigma_eta, spec);
        }
    }
    return fims;
}

BimSequence filter_bim_sequence(const GaussMarkovModel& model, MeasurementChannel channel,
                                std::int64_t horizon, const QuadratureSpec& spec) {
    if (horizon < 1) throw std::invalid_argument("filter_bim_sequence: horizon must be >= 1");
    const TransitionInfo d = transition_info(model);
    const std::vector<double> fims = expected_fim_sequence(model, channel, horizon, spec);

    BimSequence seq{BimKind::Filter, horizon, {}};
    seq.values.reserve(static_cast<std::size_t>(horizon) + 1);
    seq.values.push_back({0, one_by_one(prior_bim(model))});
    for (std::int64_t k = 1; k <= horizon; ++k) {
        seq.values.push_back(
            {k, filter_bim_step(seq.values.back().info, d, one_by_one(fims[k]), k)});
    }
    return seq;
}

BimSequence predict_bim(const InfoMatrix& j_anchor, const TransitionInfo& d, std::int64_t steps,
                        std::int64_t anchor_block) {
    if (steps < 1) throw std::invalid_argument("predict_bim: steps must be >= 1");
    BimSequence seq{BimKind::Predict, anchor_block, {}};
    seq.values.reserve(static_cast<std::size_t>(steps));
    InfoMatrix j = j_anchor;
    for (std::int64_t s = 1; s <= steps; ++s) {
        j = predict_bim_step(j, d, anchor_block + s);
        seq.values.push_back({anchor_block + s, j});
    }
    return seq;
}

InfoMatrix smooth_bim_backward(const BimSequence& filter_seq, const TransitionInfo& d,
                               std::int64_t l) {
    if (filter_seq.kind != BimKind::Filter)
        throw std::invalid_argument("smooth_bim_backward needs a filter sequence");
    const std::int64_t k = filter_seq.anchor_block;
    if (l < 0 || l >= k) throw std::invalid_argument("smooth_bim_backward: need 0 <= l < k");

    InfoMatrix j_smooth = filter_seq.at(k);
    for (std::int64_t m = k - 1; m >= l; --m) {
        const InfoMatrix& j_filt = filter_seq.at(m);
        const InfoMatrix j_pred = predict_bim_step(j_filt, d, m + 1);
        const InfoMatrix inner = d.d22 + j_smooth - j_pred;
        const InfoMatrix gain = spd_solve(inner, d.d21, "D22 + J_{l+1|k} - J_{l+1|l}", m);
        j_smooth = symmetrized(j_filt + d.d11 - d.d12 * gain);
    }
    return j_smooth;
}

SmoothingGain smoothing_gain(const TransitionInfo& d, std::span<const InfoMatrix> expected_fims,
                             std::int64_t l, std::int64_t k) {
    if (l < 0 || l >= k) throw std::invalid_argument("smoothing_gain: need 0 <= l < k");
    if (expected_fims.size() <= static_cast<std::size_t>(k))
        throw std::invalid_argument("smoothing_gain: expected FIMs must cover blocks up to k");
    InfoMatrix kappa = InfoMatrix::Zero(d.dimension(), d.dimension());
    for (std::int64_t m = k - 1; m >= l; --m)
        kappa = smoothing_gain_step(kappa, d, expected_fims[m + 1], m + 1);
    return {l, k, kappa};
}

SmoothingGain smoothing_gain(const TransitionInfo& d, std::span<const double> expected_fims,
                             std::int64_t l, std::int64_t k) {
    std::vector<InfoMatrix> fims;
    fims.reserve(expected_fims.size());
    for (double f : expected_fims) fims.push_back(one_by_one(f));
    return smoothing_gain(d, std::span<const InfoMatrix>(fims), l, k);
}

InfoMatrix smooth_bim_compact(const BimSequence& filter_seq, const SmoothingGain& gain) {
    return filter_seq.at(gain.lag_from) + gain.kappa;
}

BimSequence smooth_bim_sequence(const BimSequence& filter_seq, const TransitionInfo& d,
                                std::span<const double> expected_fims) {
    const std::int64_t k = filter_seq.anchor_block;
    if (expected_fims.size() <= static_cast<std::size_t>(k))
        throw std::invalid_argument("smooth_bim_sequence: expected FIMs must cover blocks up to k");
    BimSequence seq{BimKind::Smooth, k, {}};
    seq.values.resize(static_cast<std::size_t>(k));
    InfoMatrix kappa = InfoMatrix::Zero(d.dimension(), d.dimension());
    for (std::int64_t m = k - 1; m >= 0; --m) {
        kappa = smoothing_gain_step(kappa, d, one_by_one(expected_fims[m + 1]), m + 1);
        seq.values[m] = {m, filter_seq.at(m) + kappa};
    }
    return seq;
}

}  // namespace bitsmooth
