// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerics: Q is evaluated by its own series and
// continued fraction in long double, bounds come from dense joint
// information matrices, fixed points from brute-force iteration or the
// quadratic formula.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using real = long double;

inline real phi(real x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi_v<real>); }

// Q(x) for x >= 0: power series Q = 1/2 - phi(x) sum x^(2n+1)/(2n+1)!! below 5,
// Lentz continued fraction for the Mills ratio above.
inline real q_positive(real x) {
    if (x < 5) {
        real term = x, sum = x;
        for (int n = 1; n < 400; ++n) {
            term *= x * x / (2 * n + 1);
            sum += term;
            if (term < sum * 1e-22L) break;
        }
        return 0.5L - phi(x) * sum;
    }
    // Q/phi = 1/(x + 1/(x + 2/(x + 3/(x + ...))))
    const real tiny = 1e-300L;
    real f = x, c = x, d = 0;
    for (int n = 1; n < 500; ++n) {
        d = x + n * d;
        if (d == 0) d = tiny;
        c = x + n / c;
        if (c == 0) c = tiny;
        d = 1 / d;
        const real delta = c * d;
        f *= delta;
        if (std::abs(delta - 1) < 1e-21L) break;
    }
    return phi(x) / f;
}

inline real q(real x) { return x >= 0 ? q_positive(x) : 1 - q_positive(-x); }

inline real fq(real theta, real sigma) {
    const real x = theta / sigma;
    return std::exp(-x * x) / (2 * std::numbers::pi_v<real> * sigma * sigma * q(x) * q(-x));
}

// E[F_q] for theta ~ N(mean, variance) by the composite trapezoid rule over
// mean +/- width*sd.
inline real expected_fq_trapezoid(real mean, real variance, real sigma, int nodes = 100000,
                                  real width = 10) {
    const real sd = std::sqrt(variance);
    const real a = mean - width * sd, h = 2 * width * sd / (nodes - 1);
    real sum = 0;
    for (int i = 0; i < nodes; ++i) {
        const real t = a + i * h;
        const real z = (t - mean) / sd;
        const real w = (i == 0 || i == nodes - 1) ? 0.5L : 1.0L;
        sum += w * fq(t, sigma) * std::exp(-z * z / 2);
    }
    return sum * h / (sd * std::sqrt(2 * std::numbers::pi_v<real>));
}

inline double iterate(const std::function<double(double)>& f, double x0, int steps) {
    double x = x0;
    for (int i = 0; i < steps; ++i) x = f(x);
    return x;
}

inline double positive_root(double a, double b, double c) {
    return (-b + std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

// Joint Bayesian information of (theta_0, ..., theta_k) for the scalar
// Gauss-Markov model with per-block measurement information fims[m],
// m = 1..k. The marginal bound of theta_l is 1 / [J^{-1}]_{ll}.
inline Eigen::MatrixXd joint_information(double alpha, double sigma_z, double sigma0,
                                         const std::vector<double>& fims, std::int64_t k) {
    const double q = 1.0 / (sigma_z * sigma_z);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(k + 1, k + 1);
    j(0, 0) = 1.0 / (sigma0 * sigma0);
    for (std::int64_t m = 1; m <= k; ++m) {
        j(m - 1, m - 1) += alpha * alpha * q;
        j(m, m) += q + fims[m];
        j(m - 1, m) -= alpha * q;
        j(m, m - 1) -= alpha * q;
    }
    return j;
}

inline double marginal_information(const Eigen::MatrixXd& joint, std::int64_t l) {
    return 1.0 / joint.inverse()(l, l);
}

}  // namespace oracle
