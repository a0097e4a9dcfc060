#include "bitsmooth/steady.hpp"

#include <cmath>
#include <string>

#include "bitsmooth/bim.hpp"
#include "bitsmooth/errors.hpp"

namespace bitsmooth {
namespace {

void require_stationary_for(const GaussMarkovModel& model, MeasurementChannel channel) {
    if (channel == MeasurementChannel::OneBit && !model.stationary())
        throw DomainError("1-bit steady state needs |alpha| < 1 (stationary marginal)");
}

FixedPoint checked(FixedPoint fp, const char* what) {
    if (!fp.converged) {
        throw ConvergenceError(std::string(what) + " did not converge after " +
                                   std::to_string(fp.iterations) + " iterations",
                               fp.value, fp.previous);
    }
    return fp;
}

double one_minus_alpha_sq(double alpha) { return (1.0 - alpha) * (1.0 + alpha); }

}  // namespace

double steady_expected_fim(const GaussMarkovModel& model, MeasurementChannel channel,
                           const QuadratureSpec& spec) {
    model.validate();
    if (channel == MeasurementChannel::Unquantized)
        return 1.0 / (model.sigma_eta * model.sigma_eta);
    require_stationary_for(model, channel);
    // The marginal mean alpha^k mu0 vanishes in the limit.
    const StateMoments limit{0.0, stationary_variance(model), -1};
    return shared_fq_cache()(limit, model.sigma_eta, spec);
}

FixedPoint steady_filter_bim(const GaussMarkovModel& model, MeasurementChannel channel,
                             const QuadratureSpec& spec, const ConvergenceControl& control) {
    require_stationary_for(model, channel);
    const double fim = steady_expected_fim(model, channel, spec);
    const ScalarTransition d = scalar_transition_info(model);
    auto step = [&](double j) { return filter_bim_step(j, d, fim); };
    return checked(iterate_fixed_point(step, prior_bim(model), control), "steady filter BIM");
}

FixedPoint steady_smoothing_gain(const GaussMarkovModel& model, MeasurementChannel channel,
                                 const QuadratureSpec& spec, const ConvergenceControl& control) {
    require_stationary_for(model, channel);
    const double fim = steady_expected_fim(model, channel, spec);
    const ScalarTransition d = scalar_transition_info(model);
    auto step = [&](double kappa) { return smoothing_gain_step(kappa, d, fim); };
    return checked(iterate_fixed_point(step, 0.0, control), "steady smoothing gain");
}

double closed_form_filter_bim(const GaussMarkovModel& model, double expected_fim) {
    model.validate();
    const double a = 1.0 / (model.sigma_z * model.sigma_z);
    const double c = one_minus_alpha_sq(model.alpha) * a + expected_fim;
    const double disc = std::sqrt(c * c + 4.0 * model.alpha * model.alpha * a * expected_fim);
    return 0.5 * (c + disc);
}

double closed_form_smoothing_gain(const GaussMarkovModel& model, double expected_fim) {
    model.validate();
    const double a = 1.0 / (model.sigma_z * model.sigma_z);
    const double c = one_minus_alpha_sq(model.alpha) * a + expected_fim;
    const double prod = model.alpha * model.alpha * a * expected_fim;
    // (sqrt(c^2 + 4p) - c) / 2 without cancellation.
    return 2.0 * prod / (c + std::sqrt(c * c + 4.0 * prod));
}

SteadyStateReport performance_ratios(const GaussMarkovModel& model, const QuadratureSpec& spec,
                                     const ConvergenceControl& control) {
    model.validate();
    if (!model.stationary()) throw DomainError("performance ratios need |alpha| < 1");

    const FixedPoint fu = steady_filter_bim(model, MeasurementChannel::Unquantized, spec, control);
    const FixedPoint fq1 = steady_filter_bim(model, MeasurementChannel::OneBit, spec, control);
    const FixedPoint ku = steady_smoothing_gain(model, MeasurementChannel::Unquantized, spec, control);
    const FixedPoint kq = steady_smoothing_gain(model, MeasurementChannel::OneBit, spec, control);

    SteadyStateReport r;
    r.j_filter_unq = fu.value;
    r.j_filter_q = fq1.value;
    r.kappa_unq = ku.value;
    r.kappa_q = kq.value;
    r.j_smooth_unq = r.j_filter_unq + r.kappa_unq;
    r.j_smooth_q = r.j_filter_q + r.kappa_q;
    r.rho_f_db = to_db(r.j_filter_q / r.j_filter_unq);
    r.rho_sl_db = to_db(r.j_smooth_q / r.j_smooth_unq);
    r.rho_s_db = to_db(r.j_smooth_q / r.j_filter_unq);
    r.snr_db = snr_db(model);
    r.iterations_filter_unq = fu.iterations;
    r.iterations_filter_q = fq1.iterations;
    r.iterations_kappa_unq = ku.iterations;
    r.iterations_kappa_q = kq.iterations;
    r.converged = fu.converged && fq1.converged && ku.converged && kq.converged;
    return r;
}

double snr_to_sigma_z(double alpha, double sigma_eta, double snr_db) {
    if (!(std::abs(alpha) < 1.0)) throw DomainError("snr_to_sigma_z needs |alpha| < 1");
    if (!(sigma_eta > 0.0)) throw std::invalid_argument("sigma_eta must be positive");
    return sigma_eta * std::sqrt(one_minus_alpha_sq(alpha) * std::pow(10.0, snr_db / 10.0));
}

GaussMarkovModel model_at_snr(const GaussMarkovModel& model, double snr) {
    GaussMarkovModel out = model;
    out.sigma_z = snr_to_sigma_z(model.alpha, model.sigma_eta, snr);
    out.validate();
    return out;
}

double snr_db(const GaussMarkovModel& model) {
    return to_db(stationary_variance(model) / (model.sigma_eta * model.sigma_eta));
}

double to_db(double ratio) noexcept { return 10.0 * std::log10(ratio); }

}  // namespace bitsmooth
