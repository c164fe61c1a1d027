#pragma once

// The market model zoo: deterministic markets with closed-form log-prices
// and the normalized Vasicek market driven by exact Ornstein-Uhlenbeck
// transition sampling.
//
// Every market exposes log P_t^T per scenario as its primitive; prices like
// exp(T^2 - t^2) overflow doubles long before the log does. Deterministic
// markets ignore the scenario index. Stochastic markets evaluate only on
// their simulation grid in t; there is no interpolation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dirlab/rng.hpp"
#include "dirlab/term_structure.hpp"

namespace dirlab {

enum class MarketCharacter { deterministic, stochastic };

/// Normalized Vasicek short-rate parameters. The mean-reversion speed is
/// fixed at 1 and the volatility at sqrt(2):  dr = (b - r) dt + sqrt(2) dW.
struct VasicekParams {
    double r0 = 0.0;
    double b = 0.0;
};

enum class SavingsKind { exp_neg_t_squared, exp_t_squared, short_rate_integral };

/// Seeded Monte Carlo paths of the short rate and its running integral on a
/// shared time grid. integrated_rate is the trapezoidal accumulation of
/// short_rate along time_grid, starting at 0 at the first grid point.
struct ScenarioEnsemble {
    std::vector<double> time_grid;
    std::size_t n_paths = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> short_rate;       // n_paths x time_grid.size(), path-major
    std::vector<double> integrated_rate;  // same layout

    double rate(std::size_t path, std::size_t k) const {
        return short_rate[path * time_grid.size() + k];
    }
    double integral(std::size_t path, std::size_t k) const {
        return integrated_rate[path * time_grid.size() + k];
    }

    /// Index of t on the grid; off-grid evaluation is an error by design.
    std::size_t index_of(double t) const {
        const auto it = std::lower_bound(time_grid.begin(), time_grid.end(), t - 1e-9);
        if (it == time_grid.end() || std::abs(*it - t) > 1e-9)
            throw std::domain_error("time " + std::to_string(t) +
                                    " is not on the simulation grid (no interpolation)");
        return static_cast<std::size_t>(it - time_grid.begin());
    }
};

/// Uniform grid {0, 1/steps_per_year, ...} ending exactly at the horizon
/// (appended as a short final step when it is not grid-aligned), with the
/// step an exact binary fraction when steps_per_year is a power of two.
inline std::vector<double> uniform_time_grid(double horizon, std::size_t steps_per_year = 64) {
    if (!(horizon >= 0.0) || steps_per_year == 0)
        throw std::domain_error("uniform_time_grid: need horizon >= 0 and steps_per_year > 0");
    const double h = 1.0 / static_cast<double>(steps_per_year);
    const auto n = static_cast<std::size_t>(std::floor(horizon * steps_per_year + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * h;
    if (grid.back() < horizon - 1e-12) grid.push_back(horizon);
    return grid;
}

/// Keep every `stride`-th grid point of an ensemble (the path values are
/// shared, so coarse and fine integrals differ only by trapezoid error);
/// integrated_rate is re-accumulated on the coarse grid.
inline ScenarioEnsemble subsample_ensemble(const ScenarioEnsemble& fine, std::size_t stride) {
    const std::size_t m = fine.time_grid.size();
    if (stride == 0 || (m - 1) % stride != 0)
        throw std::domain_error("subsample_ensemble: stride must divide the step count");
    const std::size_t mc = (m - 1) / stride + 1;
    ScenarioEnsemble coarse;
    coarse.n_paths = fine.n_paths;
    coarse.master_seed = fine.master_seed;
    coarse.time_grid.resize(mc);
    for (std::size_t k = 0; k < mc; ++k) coarse.time_grid[k] = fine.time_grid[k * stride];
    coarse.short_rate.resize(fine.n_paths * mc);
    coarse.integrated_rate.resize(fine.n_paths * mc);
    for (std::size_t path = 0; path < fine.n_paths; ++path) {
        double* r = &coarse.short_rate[path * mc];
        double* acc = &coarse.integrated_rate[path * mc];
        for (std::size_t k = 0; k < mc; ++k) r[k] = fine.rate(path, k * stride);
        acc[0] = 0.0;
        for (std::size_t k = 0; k + 1 < mc; ++k)
            acc[k + 1] = acc[k] +
                         0.5 * (coarse.time_grid[k + 1] - coarse.time_grid[k]) * (r[k] + r[k + 1]);
    }
    return coarse;
}

/// Insert midpoints between consecutive grid points (for step-halving
/// convergence checks).
inline std::vector<double> refine_time_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) return grid;
    std::vector<double> fine;
    fine.reserve(grid.size() * 2 - 1);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        fine.push_back(grid[k]);
        fine.push_back(0.5 * (grid[k] + grid[k + 1]));
    }
    fine.push_back(grid.back());
    return fine;
}

namespace detail {

inline void require_valid_grid(const std::vector<double>& grid, const char* who) {
    if (grid.empty()) throw std::domain_error(std::string(who) + ": empty time grid");
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
        if (!(grid[k] < grid[k + 1]))
            throw std::domain_error(std::string(who) + ": time grid must be strictly increasing");
}

}  // namespace detail

/// Sample OU paths started from `start_rate` at time grid[0] using the exact
/// transition  r_{u+h} | r_u ~ N(e^{-h} r_u + (1-e^{-h}) b, 1-e^{-2h}).
/// Path i consumes only the stream derived from (master_seed, i).
inline ScenarioEnsemble simulate_vasicek_from(const VasicekParams& params, double start_rate,
                                              std::vector<double> grid, std::size_t n_paths,
                                              std::uint64_t master_seed) {
    detail::require_valid_grid(grid, "simulate_vasicek_from");
    if (n_paths == 0) throw std::domain_error("simulate_vasicek_from: need n_paths >= 1");

    const std::size_t m = grid.size();
    ScenarioEnsemble ens;
    ens.time_grid = std::move(grid);
    ens.n_paths = n_paths;
    ens.master_seed = master_seed;
    ens.short_rate.resize(n_paths * m);
    ens.integrated_rate.resize(n_paths * m);

    // Per-step transition coefficients, hoisted out of the path loop.
    const std::size_t n_steps = m - 1;
    std::vector<double> decay(n_steps), level(n_steps), noise(n_steps), half_h(n_steps);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double h = ens.time_grid[k + 1] - ens.time_grid[k];
        decay[k] = std::exp(-h);
        level[k] = -std::expm1(-h) * params.b;          // (1 - e^{-h}) b
        noise[k] = std::sqrt(-std::expm1(-2.0 * h));    // sqrt(1 - e^{-2h})
        half_h[k] = 0.5 * h;
    }

    for (std::size_t path = 0; path < n_paths; ++path) {
        Xoshiro256pp rng = path_rng(master_seed, path);
        NormalSampler normal;
        double* r = &ens.short_rate[path * m];
        double* acc = &ens.integrated_rate[path * m];
        r[0] = start_rate;
        acc[0] = 0.0;
        for (std::size_t k = 0; k + 1 < m; ++k) {
            r[k + 1] = decay[k] * r[k] + level[k] + noise[k] * normal(rng);
            acc[k + 1] = acc[k] + half_h[k] * (r[k] + r[k + 1]);
        }
    }
    return ens;
}

/// Sample an ensemble from time 0 with r_0 = params.r0. The grid must start
/// at 0.
inline ScenarioEnsemble simulate_vasicek(const VasicekParams& params, std::vector<double> grid,
                                         std::size_t n_paths, std::uint64_t master_seed) {
    detail::require_valid_grid(grid, "simulate_vasicek");
    if (grid.front() != 0.0) throw std::domain_error("simulate_vasicek: grid must start at 0");
    return simulate_vasicek_from(params, params.r0, std::move(grid), n_paths, master_seed);
}

/// Closed-form Vasicek yield over [t, T] given the short rate at t, under
/// the speed-1 / volatility-sqrt(2) normalization:
///   R_t^T = g/tau r_t + g^2/(2 tau) + (b-1)(1 - g/tau),  g = 1 - e^{-tau}.
inline double vasicek_yield(double short_rate, double t, double T, double b) {
    if (!(T > t)) throw std::domain_error("vasicek_yield: need T > t");
    const double tau = T - t;
    const double g = -std::expm1(-tau);
    const double g_over_tau = g / tau;
    return g_over_tau * short_rate + g * g / (2.0 * tau) + (b - 1.0) * (1.0 - g_over_tau);
}

/// A scenario-indexed bond market: identifier, deterministic/stochastic
/// character, log-price accessor, and the declared deflator if one exists
/// (an empty log_deflator_fn means declared-absent).
struct MarketModel {
    std::string id;
    MarketCharacter character = MarketCharacter::deterministic;
    std::size_t n_scenarios = 1;
    std::function<double(std::size_t scenario, double t, double T)> log_price_fn;
    std::function<double(std::size_t scenario, double t)> log_deflator_fn;

    // Attachments for simulation-backed markets.
    std::shared_ptr<const ScenarioEnsemble> ensemble;
    std::optional<VasicekParams> vasicek;

    double log_price(std::size_t scenario, double t, double T) const {
        if (!(t >= 0.0) || !(T >= t))
            throw std::domain_error("log_price: need 0 <= t <= T");
        return log_price_fn(scenario, t, T);
    }

    double yield(std::size_t scenario, double t, double T) const {
        return yield_from_log_price(log_price(scenario, t, T), t, T);
    }

    double forward_rate(std::size_t scenario, double t, double t_prime, double T) const {
        return forward_rate_from_log_prices(log_price(scenario, t, t_prime),
                                            log_price(scenario, t, T), t, t_prime, T);
    }

    bool has_deflator() const { return static_cast<bool>(log_deflator_fn); }

    double log_deflator(std::size_t scenario, double t) const {
        if (!has_deflator())
            throw std::domain_error("market '" + id + "' declares no deflator");
        return log_deflator_fn(scenario, t);
    }
};

/// Deterministic market with P_t^T = 1 for t < 1 and P_t^T = exp(T^2 - t^2)
/// for 1 <= t <= T. Yields drop from R_0^T = 0 to R_1^T = -T-1; no deflator
/// is declared (none exists across the t = 1 transition).
inline MarketModel build_dir_violation_market() {
    MarketModel market;
    market.id = "dir-violation";
    market.character = MarketCharacter::deterministic;
    market.log_price_fn = [](std::size_t, double t, double T) {
        return t < 1.0 ? 0.0 : T * T - t * t;
    };
    return market;
}

/// Deterministic market with P_t^T = min{1, exp(1 - (T - t))} and deflator
/// Y_t = exp(-t). Viable for long-only strategies yet admits a textbook
/// short-the-near-bond arbitrage.
inline MarketModel build_min_exp_market() {
    MarketModel market;
    market.id = "min-exp";
    market.character = MarketCharacter::deterministic;
    market.log_price_fn = [](std::size_t, double t, double T) {
        return std::min(0.0, 1.0 - (T - t));
    };
    market.log_deflator_fn = [](std::size_t, double t) { return -t; };
    return market;
}

/// Deterministic savings-account market: P_t^T = B_t / B_T with
/// B_t = exp(-t^2) (yields R_t^T = -T-t, exploding downward) or
/// B_t = exp(t^2) (yields R_t^T = T+t). Deflator Y = 1/B in both cases.
inline MarketModel build_deterministic_emm_market(SavingsKind kind) {
    MarketModel market;
    market.character = MarketCharacter::deterministic;
    switch (kind) {
        case SavingsKind::exp_neg_t_squared:
            market.id = "exp-neg-t2";
            market.log_price_fn = [](std::size_t, double t, double T) { return T * T - t * t; };
            market.log_deflator_fn = [](std::size_t, double t) { return t * t; };
            break;
        case SavingsKind::exp_t_squared:
            market.id = "exp-t2";
            market.log_price_fn = [](std::size_t, double t, double T) { return t * t - T * T; };
            market.log_deflator_fn = [](std::size_t, double t) { return -t * t; };
            break;
        default:
            throw std::domain_error(
                "build_deterministic_emm_market: unsupported savings-account kind");
    }
    return market;
}

/// Flat deterministic market P_t^T = exp(-r (T - t)) with deflator exp(-rt).
inline MarketModel build_flat_market(double r) {
    MarketModel market;
    market.id = "flat";
    market.character = MarketCharacter::deterministic;
    market.log_price_fn = [r](std::size_t, double t, double T) { return -r * (T - t); };
    market.log_deflator_fn = [r](std::size_t, double t) { return -r * t; };
    return market;
}

/// Vasicek market over a simulated ensemble: log P_t^T comes from the
/// closed-form yield at the path's short rate, and the deflator is
/// Y = 1/B = exp(-int_0^t r du) with the integral taken from the ensemble.
inline MarketModel market_from_vasicek(const VasicekParams& params,
                                       std::shared_ptr<const ScenarioEnsemble> ensemble) {
    if (!ensemble) throw std::domain_error("market_from_vasicek: null ensemble");
    MarketModel market;
    market.id = "vasicek";
    market.character = MarketCharacter::stochastic;
    market.n_scenarios = ensemble->n_paths;
    market.vasicek = params;
    market.ensemble = ensemble;
    const double b = params.b;
    const ScenarioEnsemble* ens = ensemble.get();
    market.log_price_fn = [ens, b](std::size_t path, double t, double T) {
        const std::size_t k = ens->index_of(t);
        if (T == t) return 0.0;
        return -(T - t) * vasicek_yield(ens->rate(path, k), t, T, b);
    };
    market.log_deflator_fn = [ens](std::size_t path, double t) {
        return -ens->integral(path, ens->index_of(t));
    };
    return market;
}

inline MarketModel market_from_vasicek(const VasicekParams& params, ScenarioEnsemble ensemble) {
    return market_from_vasicek(params,
                               std::make_shared<const ScenarioEnsemble>(std::move(ensemble)));
}

}  // namespace dirlab
