#include "bitsmooth/qfim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "bitsmooth/errors.hpp"

namespace bitsmooth {
namespace {

constexpr double kTailSwitch = 8.0;
constexpr double kSqrt2Pi = 2.5066282746310002;  // sqrt(2 pi)

// F_q(theta) / N(theta; 0, sigma^2). Grows only linearly in |theta|, which is
// what makes it a good Gauss-Hermite integrand.
double fq_over_gaussian(double theta, double sigma) noexcept {
    const double x = std::abs(theta) / sigma;
    if (x <= kTailSwitch)
        return std::exp(-0.5 * x * x) / (kSqrt2Pi * sigma * q_function(x) * q_function(-x));
    return 1.0 / (sigma * mills_ratio(x) * q_function(-x));
}

double gaussian_pdf(double x, double mean, double variance) noexcept {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

GaussHermiteRule build_gauss_hermite(int n) {
    // Golub-Welsch for starting values, then Newton on the orthonormal
    // three-term recurrence to recover full precision in nodes and weights.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("Gauss-Hermite eigen-solve failed");

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pim4 = std::pow(std::numbers::pi, -0.25);
    for (int i = 0; i < n; ++i) {
        double z = solver.eigenvalues()(i);
        double pp = 0.0;
        for (int iter = 0; iter < 20; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        rule.nodes[i] = z;
        rule.weights[i] = 2.0 / (pp * pp);
    }
    // Enforce exact antisymmetry of the nodes.
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

double expected_fq_gauss_hermite(const StateMoments& m, double sigma_eta, int nodes) {
    // N(theta; m, v) N(theta; 0, s^2) = N(m; 0, v + s^2) N(theta; mu_c, v_c), so
    // E[F_q] = N(m; 0, v + s^2) * E_{N(mu_c, v_c)}[F_q / N(.; 0, s^2)].
    // The combined Gaussian is never wider than the noise scale, so the rule
    // resolves the F_q bump even when the state marginal is very wide.
    const double s2 = sigma_eta * sigma_eta;
    const double total = m.variance + s2;
    const double vc = m.variance * (s2 / total);
    const double mc = m.mean * (s2 / total);
    const double scale = gaussian_pdf(m.mean, 0.0, total);
    const double spread = std::sqrt(2.0 * vc);

    const GaussHermiteRule& rule = gauss_hermite_rule(nodes);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double theta = mc + spread * rule.nodes[i];
        const double value = fq_over_gaussian(theta, sigma_eta);
        if (!std::isfinite(value))
            throw QuadratureFailure("non-finite F_q sample in Gauss-Hermite rule", i, theta);
        sum += rule.weights[i] * value;
    }
    return scale * sum / std::sqrt(std::numbers::pi);
}

double expected_fq_trapezoid(const StateMoments& m, double sigma_eta, int nodes,
                             double half_width) {
    const double sd = std::sqrt(m.variance);
    const double lo = m.mean - half_width * sd;
    const double h = 2.0 * half_width * sd / (nodes - 1);
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double theta = lo + i * h;
        const double value = fq(theta, sigma_eta) * gaussian_pdf(theta, m.mean, m.variance);
        if (!std::isfinite(value))
            throw QuadratureFailure("non-finite F_q sample in trapezoid rule",
                                    static_cast<std::size_t>(i), theta);
        sum += (i == 0 || i == nodes - 1) ? 0.5 * value : value;
    }
    return h * sum;
}

}  // namespace

void QuadratureSpec::validate() const {
    if (rule == QuadratureRule::GaussHermite) {
        if (nodes < 16 || nodes > 512)
            throw std::invalid_argument("Gauss-Hermite nodes must lie in [16, 512]");
        return;
    }
    if (nodes < 64 || nodes > 1'000'000)
        throw std::invalid_argument("trapezoid nodes must lie in [64, 1e6]");
    if (!(half_width_sigmas >= 4.0 && half_width_sigmas <= 16.0))
        throw std::invalid_argument("trapezoid half_width_sigmas must lie in [4, 16]");
}

double q_function(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double mills_ratio(double x) noexcept {
    if (x <= kTailSwitch) return q_function(x) * kSqrt2Pi * std::exp(0.5 * x * x);
    double t = x;
    for (int n = 60; n >= 1; --n) t = x + n / t;
    return 1.0 / t;
}

double fq(double theta, double sigma_eta) noexcept { return fq(theta, sigma_eta, &q_function); }

double fq(double theta, double sigma_eta, QFunction q) noexcept {
    const double x = std::abs(theta) / sigma_eta;
    const double s2 = sigma_eta * sigma_eta;
    if (x <= kTailSwitch)
        return std::exp(-x * x) / (2.0 * std::numbers::pi * s2 * q(x) * q(-x));
    // Q(x) = phi(x) M(x): exp(-x^2) / Q(x) = sqrt(2 pi) exp(-x^2/2) / M(x).
    return std::exp(-0.5 * x * x) / (kSqrt2Pi * s2 * mills_ratio(x) * q(-x));
}

double expected_fq(const StateMoments& moments, double sigma_eta, const QuadratureSpec& spec) {
    spec.validate();
    if (!(moments.variance > 0.0) || !std::isfinite(moments.variance))
        throw std::invalid_argument("expected_fq: variance must be positive and finite");
    if (!(sigma_eta > 0.0)) throw std::invalid_argument("expected_fq: sigma_eta must be positive");

    const double value =
        spec.rule == QuadratureRule::GaussHermite
            ? expected_fq_gauss_hermite(moments, sigma_eta, spec.nodes)
            : expected_fq_trapezoid(moments, sigma_eta, spec.nodes, spec.half_width_sigmas);
    // The exact integral cannot exceed max F_q = F_q(0).
    return std::min(value, 2.0 / (std::numbers::pi * sigma_eta * sigma_eta));
}

double expected_fim(MeasurementChannel channel, const StateMoments& moments, double sigma_eta,
                    const QuadratureSpec& spec) {
    if (channel == MeasurementChannel::Unquantized) {
        if (!(sigma_eta > 0.0)) throw std::invalid_argument("expected_fim: sigma_eta must be positive");
        return 1.0 / (sigma_eta * sigma_eta);
    }
    return expected_fq(moments, sigma_eta, spec);
}

const GaussHermiteRule& gauss_hermite_rule(int nodes) {
    static std::mutex mutex;
    static std::map<int, GaussHermiteRule> rules;
    std::lock_guard lock(mutex);
    auto it = rules.find(nodes);
    if (it == rules.end()) it = rules.emplace(nodes, build_gauss_hermite(nodes)).first;
    return it->second;
}

std::size_t ExpectedFqCache::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(k.mean);
    mix(k.variance);
    mix(k.sigma_eta);
    mix(static_cast<std::uint64_t>(k.rule));
    mix(static_cast<std::uint64_t>(k.nodes));
    mix(k.half_width);
    return static_cast<std::size_t>(h);
}

double ExpectedFqCache::operator()(const StateMoments& moments, double sigma_eta,
                                   const QuadratureSpec& spec) {
    const Key key{std::bit_cast<std::uint64_t>(moments.mean),
                  std::bit_cast<std::uint64_t>(moments.variance),
                  std::bit_cast<std::uint64_t>(sigma_eta),
                  static_cast<int>(spec.rule),
                  spec.nodes,
                  std::bit_cast<std::uint64_t>(spec.half_width_sigmas)};
    {
        std::shared_lock lock(mutex_);
        if (auto it = values_.find(key); it != values_.end()) {
            hits_.fetch_add(1, std::memory_order_relaxed);
            return it->second;
        }
    }
    const double value = expected_fq(moments, sigma_eta, spec);
    std::unique_lock lock(mutex_);
    values_.insert_or_assign(key, value);
    return value;
}

std::size_t ExpectedFqCache::size() const {
    std::shared_lock lock(mutex_);
    return values_.size();
}

std::size_t ExpectedFqCache::hits() const { return hits_.load(std::memory_order_relaxed); }

void ExpectedFqCache::clear() {
    std::unique_lock lock(mutex_);
    values_.clear();
    hits_.store(0, std::memory_order_relaxed);
}

ExpectedFqCache& shared_fq_cache() {
    static ExpectedFqCache cache;
    return cache;
}

}  // namespace bitsmooth
