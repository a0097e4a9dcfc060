// Recursive Bayesian information matrices for filtering, prediction and
// smoothing (Tichavsky-type recursions), plus the compact smoothing-gain
// form J_{l|k} = J_{l|l} + kappa(l|k).
//
// The recursions are written for general M x M information matrices; the
// shipped model is scalar, and scalar overloads are provided for the
// fixed-point solvers where heap-free iteration matters.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bitsmooth/model.hpp"
#include "bitsmooth/qfim.hpp"

namespace bitsmooth {

using InfoMatrix = Eigen::MatrixXd;

enum class BimKind { Filter, Predict, Smooth };

struct BimEntry {
    std::int64_t block;
    InfoMatrix info;
};

struct BimSequence {
    BimKind kind = BimKind::Filter;
    std::int64_t anchor_block = 0;  // last measurement block used
    std::vector<BimEntry> values;

    /// Entry for block l; throws std::out_of_range if absent.
    const InfoMatrix& at(std::int64_t block) const;
    /// Scalar value of the 1x1 entry for block l.
    double scalar_at(std::int64_t block) const;
};

struct SmoothingGain {
    std::int64_t lag_from;  // l
    std::int64_t anchor;    // k
    InfoMatrix kappa;
};

// -- single steps ------------------------------------------------------------

/// J_{k|k} = D22 + E[F] - D21 (J_{k-1|k-1} + D11)^{-1} D12.
/// Throws NumericalDegeneracy(block) if J_prev + D11 is not positive definite.
InfoMatrix filter_bim_step(const InfoMatrix& j_prev, const TransitionInfo& d,
                           const InfoMatrix& expected_fim, std::int64_t block = -1);
double filter_bim_step(double j_prev, const ScalarTransition& d, double expected_fim,
                       std::int64_t block = -1);

/// One prediction step J_{l|k} from J_{l-1|k}: D22 - D21 (D11 + J)^{-1} D12.
InfoMatrix predict_bim_step(const InfoMatrix& j_prev, const TransitionInfo& d,
                            std::int64_t block = -1);
double predict_bim_step(double j_prev, const ScalarTransition& d, std::int64_t block = -1);

/// One smoothing-gain step:
/// kappa(l|k) = D11 - D12 (D22 + E[F(theta_{l+1})] + kappa(l+1|k))^{-1} D21,
/// with kappa(k|k) = 0 giving the initial value kappa(k-1|k).
InfoMatrix smoothing_gain_step(const InfoMatrix& kappa_next, const TransitionInfo& d,
                               const InfoMatrix& expected_fim_next, std::int64_t block = -1);
double smoothing_gain_step(double kappa_next, const ScalarTransition& d,
                           double expected_fim_next, std::int64_t block = -1);

// -- sequences -----------------------------------------------------------------

/// Per-block expected FIM E[F(theta_k)] for k = 0..horizon (entry 0 is unused
/// and set to zero). Unquantized: 1/sigma_eta^2. OneBit: quadrature over the
/// prior marginal of theta_k, memoized in the shared cache.
std::vector<double> expected_fim_sequence(const GaussMarkovModel& model,
                                          MeasurementChannel channel, std::int64_t horizon,
                                          const QuadratureSpec& spec = {});

/// Filtering BIMs J_{0|0} .. J_{K|K}.
BimSequence filter_bim_sequence(const GaussMarkovModel& model, MeasurementChannel channel,
                                std::int64_t horizon, const QuadratureSpec& spec = {});

/// Prediction BIMs J_{k+1|k} .. J_{k+steps|k} starting from J_{k|k} = j_anchor.
BimSequence predict_bim(const InfoMatrix& j_anchor, const TransitionInfo& d,
                        std::int64_t steps, std::int64_t anchor_block = 0);

/// J_{l|k} by the direct backward recursion
///   J_{m|k} = J_{m|m} + D11 - D12 (D22 + J_{m+1|k} - J_{m+1|m})^{-1} D21
/// started at J_{k|k}, k = filter_seq.anchor_block. The one-step predictions
/// J_{m+1|m} are recomputed from the filter sequence.
InfoMatrix smooth_bim_backward(const BimSequence& filter_seq, const TransitionInfo& d,
                               std::int64_t l);

/// kappa(l|k) by backward recursion. expected_fims is indexed by block and
/// must cover blocks l+1..k.
SmoothingGain smoothing_gain(const TransitionInfo& d, std::span<const InfoMatrix> expected_fims,
                             std::int64_t l, std::int64_t k);
SmoothingGain smoothing_gain(const TransitionInfo& d, std::span<const double> expected_fims,
                             std::int64_t l, std::int64_t k);

/// J_{l|k} = J_{l|l} + kappa(l|k).
InfoMatrix smooth_bim_compact(const BimSequence& filter_seq, const SmoothingGain& gain);

/// Smoothing BIMs J_{l|k} for all l in [0, k) of a filter sequence, using the
/// compact form. Returned sequence has kind Smooth and anchor k.
BimSequence smooth_bim_sequence(const BimSequence& filter_seq, const TransitionInfo& d,
                                std::span<const double> expected_fims);

}  // namespace bitsmooth
