#pragma once

// Test-only brute-force oracles, kept independent of the library's
// computation paths: a fine-step Euler-Maruyama integrator for the
// normalized OU short rate, an RK4 quadrature of the affine bond-pricing
// ODE system, and a two-sample Kolmogorov-Smirnov statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dirlab/rng.hpp"

namespace oracles {

/// Euler-Maruyama paths of dr = (b - r) dt + sqrt(2) dW, returning r at the
/// horizon for each path.
inline std::vector<double> euler_maruyama_short_rate(double r0, double b, double horizon,
                                                     double dt, std::size_t n_paths,
                                                     std::uint64_t seed) {
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const double h = horizon / static_cast<double>(steps);
    const double vol = std::sqrt(2.0 * h);
    std::vector<double> out(n_paths);
    for (std::size_t path = 0; path < n_paths; ++path) {
        dirlab::Xoshiro256pp rng = dirlab::path_rng(seed, path);
        dirlab::NormalSampler normal;
        double r = r0;
        for (std::size_t k = 0; k < steps; ++k) r += (b - r) * h + vol * normal(rng);
        out[path] = r;
    }
    return out;
}

/// Yield over tau from RK4 integration of the affine ODE pair
///   B' = 1 - B,  A' = b B - B^2,  A(0) = B(0) = 0,
/// so that the zero-coupon price is exp(-A - B r).
inline double affine_ode_yield(double short_rate, double tau, double b) {
    const int steps = std::max(64, static_cast<int>(std::ceil(tau / 0.005)));
    const double h = tau / steps;
    double B = 0.0, A = 0.0;
    const auto fB = [](double x) { return 1.0 - x; };
    const auto fA = [b](double x) { return b * x - x * x; };
    for (int k = 0; k < steps; ++k) {
        const double k1b = fB(B), k1a = fA(B);
        const double k2b = fB(B + 0.5 * h * k1b), k2a = fA(B + 0.5 * h * k1b);
        const double k3b = fB(B + 0.5 * h * k2b), k3a = fA(B + 0.5 * h * k2b);
        const double k4b = fB(B + h * k3b), k4a = fA(B + h * k3b);
        A += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        B += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    }
    return (A + B * short_rate) / tau;
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F1(x) - F2(x)|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Critical value of the two-sample KS statistic at level alpha.
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

/// Mean and unbiased variance.
struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

inline Moments moments(const std::vector<double>& sample) {
    Moments m;
    for (double x : sample) m.mean += x;
    m.mean /= static_cast<double>(sample.size());
    for (double x : sample) m.variance += (x - m.mean) * (x - m.mean);
    if (sample.size() > 1) m.variance /= static_cast<double>(sample.size() - 1);
    return m;
}

}  // namespace oracles
