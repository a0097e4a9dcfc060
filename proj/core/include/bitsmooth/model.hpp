// Scalar Gauss-Markov state-space model, measurement channels and the
// transition/prior information terms shared by every bound recursion.
#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace bitsmooth {

/**
 * Scalar Gauss-Markov model
 *
 *   theta_k = alpha * theta_{k-1} + z_k,   z_k ~ N(0, sigma_z^2)
 *   theta_0 ~ N(mu0, sigma0^2)
 *
 * observed through a measurement channel with additive noise
 * eta_k ~ N(0, sigma_eta^2). One scalar sample per block.
 */
struct GaussMarkovModel {
    double alpha = 1.0;
    double sigma_z = 1.0;
    double sigma_eta = 1.0;
    double mu0 = 0.0;
    double sigma0 = 1.0;

    /// Throws std::invalid_argument unless all sigmas are positive and
    /// |alpha| <= 1.
    void validate() const;

    bool stationary() const noexcept;

    friend bool operator==(const GaussMarkovModel&, const GaussMarkovModel&) = default;
};

enum class MeasurementChannel { Unquantized, OneBit };

std::string_view to_string(MeasurementChannel channel) noexcept;
/// Accepts "unquantized" / "onebit" (also "1bit"); throws std::invalid_argument.
MeasurementChannel parse_channel(std::string_view name);

/// Applies the channel to a noisy sample: y = theta + eta, or r = sign(theta + eta)
/// with sign(0) := +1.
double observe(MeasurementChannel channel, double theta, double eta) noexcept;

struct ScalarTransition {
    double d11;
    double d12;
    double d21;
    double d22;
};

/// Expected outer products of the transition score (the D-terms of the
/// Tichavsky recursion). Matrices are M x M; the shipped model has M = 1.
struct TransitionInfo {
    Eigen::MatrixXd d11;
    Eigen::MatrixXd d12;
    Eigen::MatrixXd d21;
    Eigen::MatrixXd d22;

    Eigen::Index dimension() const noexcept { return d11.rows(); }
    /// Requires dimension() == 1.
    ScalarTransition scalar() const;
};

struct StateMoments {
    double mean;
    double variance;
    std::int64_t block;
};

ScalarTransition scalar_transition_info(const GaussMarkovModel& model);
TransitionInfo transition_info(const GaussMarkovModel& model);

/// J_{0|0} of the Gaussian prior.
double prior_bim(const GaussMarkovModel& model);

/// Marginal mean and variance of theta_k, evaluated in closed form.
StateMoments state_moments(const GaussMarkovModel& model, std::int64_t k);

/// sigma_z^2 / (1 - alpha^2). Throws DomainError for |alpha| >= 1.
double stationary_variance(const GaussMarkovModel& model);

}  // namespace bitsmooth
