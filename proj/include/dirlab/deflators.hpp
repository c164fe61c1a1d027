#pragma once

// Verification that a declared deflator Y really deflates the market: the
// deflated bond prices L^T = Y P^T must form strictly positive
// supermartingales.
//
// The supermartingale property is a conditional-expectation statement that
// finite unconditional samples cannot fully certify. We verify three
// necessary conditions instead: exact monotonicity for deterministic
// markets, unconditional expectations against the time-0 price, and
// restart-conditional expectations from representative states. Statistical
// checks pass at 4 standard errors plus an explicitly measured
// discretization allowance. All products are computed in log space and
// exponentiated once.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dirlab/markets.hpp"
#include "dirlab/rng.hpp"

namespace dirlab {

struct DeflatorCheck {
    std::string kind;
    double s = 0.0;
    double t = 0.0;
    double T = 0.0;
    double estimate = 0.0;
    double reference = 0.0;
    double se = 0.0;
    double allowance = 0.0;
    double bound = 0.0;  // tolerance actually applied to |estimate - reference|
    bool pass = false;
    std::string label;
};

struct DeflatorReport {
    std::string market;
    std::vector<DeflatorCheck> checks;

    bool all_pass() const {
        for (const auto& check : checks)
            if (!check.pass) return false;
        return true;
    }
};

inline nlohmann::json to_json(const DeflatorCheck& check) {
    return {{"kind", check.kind},       {"s", check.s},
            {"t", check.t},             {"T", check.T},
            {"estimate", check.estimate}, {"reference", check.reference},
            {"se", check.se},           {"allowance", check.allowance},
            {"bound", check.bound},     {"pass", check.pass},
            {"label", check.label}};
}

inline nlohmann::json to_json(const DeflatorReport& report) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& check : report.checks) checks.push_back(to_json(check));
    return {{"market", report.market}, {"checks", std::move(checks)}};
}

// ---------------------------------------------------------------------------
// Fault injection, used by the detection tests the suite is required to run.

/// Multiply every price observed strictly after time 0 by `factor`.
inline MarketModel inject_price_bias(const MarketModel& base, double factor) {
    if (!(factor > 0.0)) throw std::domain_error("inject_price_bias: factor must be > 0");
    MarketModel market = base;
    const auto fn = base.log_price_fn;
    const double bump = std::log(factor);
    market.log_price_fn = [fn, bump](std::size_t scenario, double t, double T) {
        const double value = fn(scenario, t, T);
        return t > 0.0 ? value + bump : value;
    };
    market.id = base.id + "+price-bias";
    return market;
}

/// Add drift_per_year * t to the log-deflator.
inline MarketModel inject_deflator_drift(const MarketModel& base, double drift_per_year) {
    if (!base.has_deflator())
        throw std::domain_error("inject_deflator_drift: market declares no deflator");
    MarketModel market = base;
    const auto fn = base.log_deflator_fn;
    market.log_deflator_fn = [fn, drift_per_year](std::size_t scenario, double t) {
        return fn(scenario, t) + drift_per_year * t;
    };
    market.id = base.id + "+deflator-drift";
    return market;
}

// ---------------------------------------------------------------------------
// Deterministic markets: a supermartingale is simply a nonincreasing path.

using Triple = std::array<double, 3>;  // (s, t, T) with s < t <= T

inline std::vector<Triple> default_monotonicity_triples() {
    std::vector<Triple> triples;
    for (double s : {0.0, 0.5, 1.0, 2.0, 3.0})
        for (double dt : {0.5, 1.0, 2.5})
            for (double dT : {0.0, 1.0, 5.0, 10.0}) {
                const double t = s + dt;
                triples.push_back({s, t, t + dT});
            }
    return triples;
}

/// Check Y_t P_t^T <= Y_s P_s^T for each (s, t, T); exact up to 1e-12 in log
/// space. A trial deflator may be supplied for markets that declare none.
inline DeflatorReport check_deterministic_supermartingale(
    const MarketModel& market, const std::vector<Triple>& triples,
    std::function<double(std::size_t, double)> trial_log_deflator = nullptr) {
    if (market.character != MarketCharacter::deterministic)
        throw std::domain_error("check_deterministic_supermartingale: market must be deterministic");
    auto log_deflator = trial_log_deflator ? std::move(trial_log_deflator) : market.log_deflator_fn;
    if (!log_deflator)
        throw std::domain_error(
            "check_deterministic_supermartingale: no deflator declared and no trial supplied");

    DeflatorReport report;
    report.market = market.id;
    for (const auto& [s, t, T] : triples) {
        if (!(s < t) || !(t <= T))
            throw std::domain_error("check_deterministic_supermartingale: need s < t <= T");
        DeflatorCheck check;
        check.kind = "exact-monotonicity";
        check.s = s;
        check.t = t;
        check.T = T;
        const double log_l_s = log_deflator(0, s) + market.log_price(0, s, T);
        const double log_l_t = log_deflator(0, t) + market.log_price(0, t, T);
        check.estimate = log_l_t - log_l_s;  // must be <= 0 for a supermartingale
        check.reference = 0.0;
        check.bound = 1e-12;
        check.pass = check.estimate <= check.bound;
        report.checks.push_back(check);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Stochastic markets: expectation checks.

namespace detail {

/// Mean and standard error of Y_t P_t^T over the market's scenarios.
inline std::pair<double, double> deflated_price_mean(const MarketModel& market, double t,
                                                     double T) {
    const std::size_t n = market.n_scenarios;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t path = 0; path < n; ++path) {
        const double value = std::exp(market.log_deflator(path, t) + market.log_price(path, t, T));
        sum += value;
        sum_sq += value * value;
    }
    const double mean = sum / static_cast<double>(n);
    double se = 0.0;
    if (n > 1) {
        const double var =
            std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) /
                              static_cast<double>(n - 1));
        se = std::sqrt(var / static_cast<double>(n));
    }
    return {mean, se};
}

inline std::vector<double> interval_grid(double from, double to, std::size_t steps_per_year) {
    if (!(to > from)) throw std::domain_error("interval_grid: need to > from");
    const double h = 1.0 / static_cast<double>(steps_per_year);
    const auto n = static_cast<std::size_t>(std::ceil((to - from) * steps_per_year - 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i < n; ++i) grid[i] = from + static_cast<double>(i) * h;
    grid[n] = to;
    if (n >= 1 && !(grid[n - 1] < grid[n])) grid.erase(grid.begin() + static_cast<long>(n) - 1);
    return grid;
}

}  // namespace detail

/// |m-hat at step h - m-hat at step h/2| for each t, maximized over the t
/// grid: the discretization allowance added to the statistical tolerance of
/// the expectation checks. Measured once per configuration on the clean
/// model, then reused for corrupted variants. The step-h estimate reuses the
/// step-h/2 paths (exact transitions compose), so sampling noise cancels and
/// the difference isolates the trapezoid error.
inline double measure_discretization_allowance(const VasicekParams& params,
                                               const std::vector<double>& grid,
                                               const std::vector<double>& t_grid, double T,
                                               std::size_t n_paths, std::uint64_t master_seed) {
    const auto fine_ens = std::make_shared<const ScenarioEnsemble>(
        simulate_vasicek(params, refine_time_grid(grid), n_paths, master_seed));
    const auto coarse_ens =
        std::make_shared<const ScenarioEnsemble>(subsample_ensemble(*fine_ens, 2));
    const auto fine = market_from_vasicek(params, fine_ens);
    const auto coarse = market_from_vasicek(params, coarse_ens);
    double allowance = 0.0;
    for (double t : t_grid) {
        const double coarse_mean = detail::deflated_price_mean(coarse, t, T).first;
        const double fine_mean = detail::deflated_price_mean(fine, t, T).first;
        allowance = std::max(allowance, std::abs(coarse_mean - fine_mean));
    }
    return allowance;
}

/// Unconditional martingale check: for each t on the grid, the sample mean
/// of Y_t P_t^T must match P_0^T within 4 SE plus the allowance.
inline DeflatorReport check_martingale_unconditional(const MarketModel& market,
                                                     const std::vector<double>& t_grid, double T,
                                                     double allowance) {
    if (market.character != MarketCharacter::stochastic)
        throw std::domain_error("check_martingale_unconditional: market must be stochastic");
    if (!market.has_deflator())
        throw std::domain_error("check_martingale_unconditional: market declares no deflator");

    DeflatorReport report;
    report.market = market.id;
    const double reference = std::exp(market.log_price(0, 0.0, T));
    for (double t : t_grid) {
        if (!(t <= T)) throw std::domain_error("check_martingale_unconditional: need t <= T");
        DeflatorCheck check;
        check.kind = "unconditional-expectation";
        check.s = 0.0;
        check.t = t;
        check.T = T;
        const auto [mean, se] = detail::deflated_price_mean(market, t, T);
        check.estimate = mean;
        check.reference = reference;
        check.se = se;
        check.allowance = allowance;
        check.bound = 4.0 * se + allowance;
        check.pass = std::abs(mean - reference) <= check.bound;
        report.checks.push_back(check);
    }
    return report;
}

/// Restart-conditional supermartingale check. For each quantile bucket of
/// the time-s law of the short rate, re-simulates from (s, r_s) and tests
/// the mean of (Y_t P_t^T)/Y_s against the closed-form P_s^T(r_s). This
/// sees the conditional property the unconditional test cannot.
/// `log_price_bump` injects a fault into the time-t price for detection
/// tests; leave it 0 for real verification.
inline DeflatorReport check_supermartingale_restart(const VasicekParams& params, double s, double t,
                                                    double T,
                                                    const std::vector<double>& quantile_buckets,
                                                    std::size_t n_restarts,
                                                    std::uint64_t master_seed,
                                                    std::size_t steps_per_year = 64,
                                                    double log_price_bump = 0.0) {
    if (!(0.0 < s && s < t && t <= T))
        throw std::domain_error("check_supermartingale_restart: need 0 < s < t <= T");

    DeflatorReport report;
    report.market = "vasicek";
    const double mean_s = std::exp(-s) * params.r0 - std::expm1(-s) * params.b;
    const double sd_s = std::sqrt(-std::expm1(-2.0 * s));
    const auto grid = detail::interval_grid(s, t, steps_per_year);
    const auto fine_grid = refine_time_grid(grid);

    for (std::size_t bucket = 0; bucket < quantile_buckets.size(); ++bucket) {
        const double q = quantile_buckets[bucket];
        const double r_s = mean_s + sd_s * inverse_normal_cdf(q);
        const double reference = std::exp(-(T - s) * vasicek_yield(r_s, s, T, params.b));
        const std::uint64_t bucket_seed = substream_seed(master_seed, 1000 + bucket);

        // Fine paths once; the step-h estimate reuses them through
        // subsampling so the allowance isolates the trapezoid error.
        const auto fine_ens = simulate_vasicek_from(params, r_s, fine_grid, n_restarts, bucket_seed);
        const auto coarse_ens = subsample_ensemble(fine_ens, 2);

        auto estimate_on = [&](const ScenarioEnsemble& ens) {
            const std::size_t last = ens.time_grid.size() - 1;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t path = 0; path < ens.n_paths; ++path) {
                const double log_p_t =
                    -(T - t) * vasicek_yield(ens.rate(path, last), t, T, params.b) + log_price_bump;
                const double value = std::exp(-ens.integral(path, last) + log_p_t);
                sum += value;
                sum_sq += value * value;
            }
            const double mean = sum / static_cast<double>(ens.n_paths);
            const double var = std::max(
                0.0, (sum_sq - static_cast<double>(ens.n_paths) * mean * mean) /
                         static_cast<double>(ens.n_paths - 1));
            return std::pair<double, double>{mean, std::sqrt(var / static_cast<double>(ens.n_paths))};
        };

        const auto [mean_coarse, se] = estimate_on(coarse_ens);
        const double mean_fine = estimate_on(fine_ens).first;

        DeflatorCheck check;
        check.kind = "restart-conditional";
        check.s = s;
        check.t = t;
        check.T = T;
        check.estimate = mean_coarse;
        check.reference = reference;
        check.se = se;
        check.allowance = std::abs(mean_coarse - mean_fine);
        check.bound = 4.0 * se + check.allowance;
        check.pass = std::abs(mean_coarse - reference) <= check.bound;
        check.label = "r_s at quantile " + std::to_string(q);
        report.checks.push_back(check);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Markov tail bound from the main proof: P[L_t/L_s > e^ell] <= e^{-ell}.

struct MarkovTailRow {
    double ell = 0.0;
    double p_hat = 0.0;
    double se = 0.0;
    double bound = 0.0;  // e^{-ell} + 3 SE
    bool pass = false;
};

struct MarkovTailTable {
    std::string market;
    double s = 0.0, t = 0.0, T = 0.0;
    std::size_t n_scenarios = 0;
    std::vector<MarkovTailRow> rows;

    bool all_pass() const {
        for (const auto& row : rows)
            if (!row.pass) return false;
        return true;
    }
};

inline nlohmann::json to_json(const MarkovTailTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows)
        rows.push_back({{"ell", row.ell},
                        {"p_hat", row.p_hat},
                        {"se", row.se},
                        {"bound", row.bound},
                        {"pass", row.pass}});
    return {{"market", table.market}, {"s", table.s},       {"t", table.t},
            {"T", table.T},           {"n", table.n_scenarios}, {"rows", std::move(rows)}};
}

/// Empirical check of P[L_t^T / L_s^T > e^ell] <= e^{-ell} for each ell,
/// with a 3-SE binomial cushion on the empirical frequency.
inline MarkovTailTable markov_tail_check(const MarketModel& market, double s, double t, double T,
                                         const std::vector<double>& ells) {
    if (!(s < t) || !(t <= T)) throw std::domain_error("markov_tail_check: need s < t <= T");
    if (!market.has_deflator())
        throw std::domain_error("markov_tail_check: market declares no deflator");

    const std::size_t n = market.n_scenarios;
    std::vector<double> log_ratio(n);
    for (std::size_t path = 0; path < n; ++path) {
        const double log_l_s = market.log_deflator(path, s) + market.log_price(path, s, T);
        const double log_l_t = market.log_deflator(path, t) + market.log_price(path, t, T);
        log_ratio[path] = log_l_t - log_l_s;
    }

    MarkovTailTable table;
    table.market = market.id;
    table.s = s;
    table.t = t;
    table.T = T;
    table.n_scenarios = n;
    for (double ell : ells) {
        MarkovTailRow row;
        row.ell = ell;
        double count = 0.0;
        for (double x : log_ratio) count += (x > ell) ? 1.0 : 0.0;
        row.p_hat = count / static_cast<double>(n);
        const double p_bound = std::exp(-ell);
        row.se = std::sqrt(p_bound * (1.0 - p_bound) / static_cast<double>(n));
        row.bound = p_bound + 3.0 * row.se;
        row.pass = row.p_hat <= row.bound;
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace dirlab
