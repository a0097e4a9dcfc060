// Fisher information of a zero-threshold 1-bit quantizer and its expectation
// over a Gaussian state marginal.
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "bitsmooth/model.hpp"

namespace bitsmooth {

enum class QuadratureRule { GaussHermite, Trapezoid };

struct QuadratureSpec {
    QuadratureRule rule = QuadratureRule::GaussHermite;
    int nodes = 128;
    double half_width_sigmas = 10.0;  // trapezoid only

    /// GaussHermite: nodes in [16, 512]. Trapezoid: nodes in [64, 1e6] and
    /// half_width_sigmas in [4, 16]. Throws std::invalid_argument.
    void validate() const;

    static QuadratureSpec gauss_hermite(int nodes = 128) {
        return {QuadratureRule::GaussHermite, nodes, 10.0};
    }
    static QuadratureSpec trapezoid(int nodes, double half_width_sigmas = 10.0) {
        return {QuadratureRule::Trapezoid, nodes, half_width_sigmas};
    }

    friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

using QFunction = double (*)(double);

/// Gaussian upper tail P(Z > x) via erfc.
double q_function(double x) noexcept;

/// Mills ratio Q(x) / phi(x) for x >= 0 (continued fraction above x = 8).
double mills_ratio(double x) noexcept;

/// Per-sample Fisher information of r = sign(theta + eta):
///   F_q(theta) = exp(-x^2) / (2 pi sigma_eta^2 Q(x) Q(-x)),  x = theta / sigma_eta.
/// Beyond |x| = 8 the quotient is evaluated through the Mills ratio so the
/// tail never forms 0/0.
double fq(double theta, double sigma_eta) noexcept;
/// Same, with an injectable Q-function (used to fault-inject the self-test).
double fq(double theta, double sigma_eta, QFunction q) noexcept;

/// E[F_q(theta)] for theta ~ N(moments.mean, moments.variance).
/// Throws QuadratureFailure on a non-finite integrand sample.
double expected_fq(const StateMoments& moments, double sigma_eta,
                   const QuadratureSpec& spec = {});

/// Channel dispatch: 1/sigma_eta^2 for Unquantized, expected_fq for OneBit.
double expected_fim(MeasurementChannel channel, const StateMoments& moments,
                    double sigma_eta, const QuadratureSpec& spec = {});

/// Physicists' Gauss-Hermite rule (weight exp(-t^2)); cached per node count.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussHermiteRule& gauss_hermite_rule(int nodes);

/// Thread-safe memo of expected_fq keyed on the exact bit patterns of
/// (mean, variance, sigma_eta) and the quadrature spec. Concurrent writers
/// compute identical values, so last-writer-wins is harmless.
class ExpectedFqCache {
public:
    double operator()(const StateMoments& moments, double sigma_eta,
                      const QuadratureSpec& spec = {});

    std::size_t size() const;
    std::size_t hits() const;
    void clear();

private:
    struct Key {
        std::uint64_t mean, variance, sigma_eta;
        int rule, nodes;
        std::uint64_t half_width;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    mutable std::shared_mutex mutex_;
    std::unordered_map<Key, double, KeyHash> values_;
    std::atomic<std::size_t> hits_{0};
};

ExpectedFqCache& shared_fq_cache();

}  // namespace bitsmooth
