#include "bitsmooth/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bitsmooth/errors.hpp"

namespace bitsmooth {

void GaussMarkovModel::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(name) + " must be positive and finite");
    };
    positive(sigma_z, "sigma_z");
    positive(sigma_eta, "sigma_eta");
    positive(sigma0, "sigma0");
    if (!std::isfinite(alpha) || std::abs(alpha) > 1.0)
        throw std::invalid_argument("alpha must satisfy |alpha| <= 1");
    if (!std::isfinite(mu0))
        throw std::invalid_argument("mu0 must be finite");
}

bool GaussMarkovModel::stationary() const noexcept { return std::abs(alpha) < 1.0; }

std::string_view to_string(MeasurementChannel channel) noexcept {
    switch (channel) {
    case MeasurementChannel::Unquantized: return "unquantized";
    case MeasurementChannel::OneBit: return "onebit";
    }
    return "unknown";
}

MeasurementChannel parse_channel(std::string_view name) {
    if (name == "unquantized") return MeasurementChannel::Unquantized;
    if (name == "onebit" || name == "1bit") return MeasurementChannel::OneBit;
    throw std::invalid_argument("unknown measurement channel: " + std::string(name));
}

double observe(MeasurementChannel channel, double theta, double eta) noexcept {
    const double y = theta + eta;
    if (channel == MeasurementChannel::Unquantized) return y;
    return y >= 0.0 ? 1.0 : -1.0;
}

ScalarTransition TransitionInfo::scalar() const {
    if (dimension() != 1)
        throw std::logic_error("TransitionInfo::scalar() requires a 1x1 model");
    return {d11(0, 0), d12(0, 0), d21(0, 0), d22(0, 0)};
}

ScalarTransition scalar_transition_info(const GaussMarkovModel& model) {
    model.validate();
    const double q = 1.0 / (model.sigma_z * model.sigma_z);
    const double cross = -model.alpha * q;
    return {model.alpha * model.alpha * q, cross, cross, q};
}

TransitionInfo transition_info(const GaussMarkovModel& model) {
    const ScalarTransition s = scalar_transition_info(model);
    auto one = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    return {one(s.d11), one(s.d12), one(s.d21), one(s.d22)};
}

double prior_bim(const GaussMarkovModel& model) {
    model.validate();
    return 1.0 / (model.sigma0 * model.sigma0);
}

StateMoments state_moments(const GaussMarkovModel& model, std::int64_t k) {
    model.validate();
    if (k < 0) throw std::invalid_argument("state_moments: block index must be >= 0");

    const double s0 = model.sigma0 * model.sigma0;
    const double sz = model.sigma_z * model.sigma_z;
    if (k == 0) return {model.mu0, s0, 0};

    const double mean = std::pow(model.alpha, static_cast<double>(k)) * model.mu0;
    const double a = std::abs(model.alpha);
    double variance;
    if (a == 0.0) {
        variance = sz;
    } else if (a == 1.0) {
        variance = s0 + static_cast<double>(k) * sz;
    } else {
        // alpha^{2k} and the geometric sum via expm1 so that alpha -> 1 keeps
        // full precision: sum_{i=1..k} alpha^{2(k-i)} = (1 - alpha^{2k}) / (1 - alpha^2).
        const double log_a2 = 2.0 * std::log(a);
        const double decay = std::exp(static_cast<double>(k) * log_a2);
        const double geometric = std::expm1(static_cast<double>(k) * log_a2) / std::expm1(log_a2);
        variance = decay * s0 + geometric * sz;
    }
    return {mean, variance, k};
}

double stationary_variance(const GaussMarkovModel& model) {
    model.validate();
    if (!model.stationary())
        throw DomainError("stationary variance requires |alpha| < 1");
    // 1 - alpha^2 = (1 - alpha)(1 + alpha) keeps precision for alpha near 1.
    const double gap = (1.0 - model.alpha) * (1.0 + model.alpha);
    return model.sigma_z * model.sigma_z / gap;
}

}  // namespace bitsmooth
