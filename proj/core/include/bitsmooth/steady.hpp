// Steady-state (k -> infinity, lag -> infinity) information values and the
// 1-bit performance ratios built from them.
#pragma once

#include <cmath>
#include <cstdint>

#include "bitsmooth/model.hpp"
#include "bitsmooth/qfim.hpp"

namespace bitsmooth {

struct ConvergenceControl {
    double rel_tol = 1e-12;
    std::int64_t max_iterations = 1'000'000;
};

/// Outcome of a scalar fixed-point iteration.
struct FixedPoint {
    double value = 0.0;
    double previous = 0.0;
    std::int64_t iterations = 0;
    bool converged = false;
};

/// Iterates x <- step(x) from x0. Stops once the a-posteriori error estimate
/// |dx| r / (1 - r), with r the observed contraction ratio of successive
/// steps, drops below rel_tol * |x|, or once the step falls to rounding
/// level; otherwise stops at the iteration cap with converged = false.
template <typename Step>
FixedPoint iterate_fixed_point(Step&& step, double x0, const ConvergenceControl& control) {
    constexpr double eps = 2.220446049250313e-16;
    FixedPoint fp{x0, x0, 0, false};
    double last_delta = 0.0;
    double ratio = -1.0;  // contraction estimate; < 0 while unknown
    for (std::int64_t n = 1; n <= control.max_iterations; ++n) {
        const double next = step(fp.value);
        const double delta = std::abs(next - fp.value);
        fp.previous = fp.value;
        fp.value = next;
        fp.iterations = n;
        const double scale = std::abs(next);
        // Rounding floor reached.
        if (delta <= 2.0 * eps * scale) {
            fp.converged = true;
            break;
        }
        // Ratios of steps near the rounding floor are noise; keep the last
        // estimate taken from steps well above it.
        if (last_delta > 0.0 && delta > 1e6 * eps * scale) ratio = delta / last_delta;
        if (ratio >= 0.0 && ratio < 1.0 &&
            delta * ratio / (1.0 - ratio) <= control.rel_tol * scale) {
            fp.converged = true;
            break;
        }
        last_delta = delta;
    }
    return fp;
}

/// E[F] in steady state: 1/sigma_eta^2, or E[F_q] over N(0, sigma_inf^2).
/// OneBit requires |alpha| < 1.
double steady_expected_fim(const GaussMarkovModel& model, MeasurementChannel channel,
                           const QuadratureSpec& spec = {});

/// Fixed point of the filtering recursion. Throws ConvergenceError at the cap,
/// DomainError for a OneBit channel with |alpha| = 1.
FixedPoint steady_filter_bim(const GaussMarkovModel& model, MeasurementChannel channel,
                             const QuadratureSpec& spec = {}, const ConvergenceControl& control = {});

/// Fixed point of the smoothing-gain recursion (the lag -> infinity gain).
FixedPoint steady_smoothing_gain(const GaussMarkovModel& model, MeasurementChannel channel,
                                 const QuadratureSpec& spec = {},
                                 const ConvergenceControl& control = {});

/// Positive roots of the quadratic fixed-point equations of the scalar
/// recursions, for a given steady expected FIM. With c = (1 - alpha^2)/sigma_z^2 + F:
///   J     = (c + sqrt(c^2 + 4 alpha^2 F / sigma_z^2)) / 2
///   kappa = J - c
double closed_form_filter_bim(const GaussMarkovModel& model, double expected_fim);
double closed_form_smoothing_gain(const GaussMarkovModel& model, double expected_fim);

struct SteadyStateReport {
    double j_filter_unq = 0.0;
    double j_filter_q = 0.0;
    double kappa_unq = 0.0;
    double kappa_q = 0.0;
    double j_smooth_unq = 0.0;
    double j_smooth_q = 0.0;
    double rho_f_db = 0.0;   // J_filter_q / J_filter_unq
    double rho_sl_db = 0.0;  // J_smooth_q / J_smooth_unq
    double rho_s_db = 0.0;   // J_smooth_q / J_filter_unq
    double snr_db = 0.0;
    std::int64_t iterations_filter_unq = 0;
    std::int64_t iterations_filter_q = 0;
    std::int64_t iterations_kappa_unq = 0;
    std::int64_t iterations_kappa_q = 0;
    bool converged = false;
};

/// Requires |alpha| < 1.
SteadyStateReport performance_ratios(const GaussMarkovModel& model,
                                     const QuadratureSpec& spec = {},
                                     const ConvergenceControl& control = {});

/// sigma_z that puts sigma_inf^2 / sigma_eta^2 at snr_db.
double snr_to_sigma_z(double alpha, double sigma_eta, double snr_db);
/// Copy of the template with sigma_z replaced by snr_to_sigma_z(...).
GaussMarkovModel model_at_snr(const GaussMarkovModel& model, double snr_db);
double snr_db(const GaussMarkovModel& model);

double to_db(double ratio) noexcept;

}  // namespace bitsmooth
