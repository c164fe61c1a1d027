#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dirlab/markets.hpp"
#include "dirlab/report_io.hpp"
#include "oracles.hpp"

using namespace dirlab;

TEST_CASE("price jump market: yields drop from 0 to -T-1", "[markets]") {
    const auto market = build_dir_violation_market();
    for (double T : {2.0, 10.0, 100.0}) {
        CHECK(market.yield(0, 0.0, T) == 0.0);
        CHECK_THAT(market.yield(0, 1.0, T), Catch::Matchers::WithinRel(-T - 1.0, 1e-13));
    }
    for (double T : {0.5, 1.0, 7.0}) CHECK(market.log_price(0, T, T) == 0.0);
    CHECK(!market.has_deflator());
}

TEST_CASE("min-exp market: yields 1 - 1/(T-t)", "[markets]") {
    const auto market = build_min_exp_market();
    CHECK_THAT(market.yield(0, 3.0, 5.0), Catch::Matchers::WithinAbs(0.5, 1e-14));
    for (double t : {0.0, 2.0}) {
        CHECK_THAT(market.yield(0, t, t + 1e6), Catch::Matchers::WithinAbs(1.0, 1e-5));
        for (double dT : {0.25, 1.0}) CHECK(market.log_price(0, t, t + dT) == 0.0);
    }
    CHECK(market.log_deflator(0, 2.0) == -2.0);
}

TEST_CASE("deterministic savings-account markets", "[markets]") {
    const auto falling = build_deterministic_emm_market(SavingsKind::exp_neg_t_squared);
    CHECK_THAT(falling.yield(0, 1.0, 4.0), Catch::Matchers::WithinRel(-5.0, 1e-13));

    const auto rising = build_deterministic_emm_market(SavingsKind::exp_t_squared);
    CHECK_THAT(rising.yield(0, 1.0, 4.0), Catch::Matchers::WithinRel(5.0, 1e-13));
    for (double T : {10.0, 40.0})
        CHECK_THAT(rising.yield(0, 1.0, T) - rising.yield(0, 3.0, T),
                   Catch::Matchers::WithinAbs(-2.0, 1e-11));

    CHECK_THROWS_AS(build_deterministic_emm_market(SavingsKind::short_rate_integral),
                    std::domain_error);
}

TEST_CASE("deterministic markets ignore the scenario index", "[markets]") {
    for (const auto& market :
         {build_dir_violation_market(), build_min_exp_market(), build_flat_market(0.04)}) {
        CHECK(market.log_price(0, 1.5, 9.0) == market.log_price(7, 1.5, 9.0));
        CHECK(market.log_price(0, 12.0, 12.0) == 0.0);
    }
}

TEST_CASE("vasicek closed-form yield limits", "[markets]") {
    const double r = 1.0, b = 1.5;
    CHECK_THAT(vasicek_yield(r, 0.0, 1e-8, b), Catch::Matchers::WithinAbs(r, 1e-6));
    CHECK_THAT(vasicek_yield(r, 2.0, 2.0 + 1e6, b), Catch::Matchers::WithinAbs(b - 1.0, 1e-4));
    const double tau = 1e5;
    CHECK_THAT(tau * (vasicek_yield(r, 0.0, tau, b) - (b - 1.0)),
               Catch::Matchers::WithinAbs(r - b + 1.5, 1e-3));
    CHECK_THROWS_AS(vasicek_yield(r, 1.0, 1.0, b), std::domain_error);
}

TEST_CASE("vasicek closed form matches the affine ODE quadrature", "[markets]") {
    for (double r : {-1.0, 0.0, 1.5})
        for (double b : {0.0, 1.5})
            for (double tau : {0.1, 1.0, 10.0, 100.0})
                CHECK_THAT(vasicek_yield(r, 0.0, tau, b),
                           Catch::Matchers::WithinAbs(oracles::affine_ode_yield(r, tau, b), 1e-8));
}

TEST_CASE("uniform time grid always contains its horizon", "[markets]") {
    for (double horizon : {0.0, 0.5, 1.0, 1.3, 2.0, 7.03125}) {
        const auto grid = uniform_time_grid(horizon, 64);
        CHECK(grid.front() == 0.0);
        CHECK(grid.back() == horizon);
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) CHECK(grid[k] < grid[k + 1]);
    }
    // Observation times land on the grid even when not step-aligned.
    const VasicekParams params{1.0, 1.5};
    const auto market =
        market_from_vasicek(params, simulate_vasicek(params, uniform_time_grid(1.3, 64), 8, 3));
    CHECK(std::isfinite(market.yield(0, 1.3, 10.0)));
}

TEST_CASE("exact transition sampling: degenerate grid and input validation", "[markets]") {
    const VasicekParams params{0.7, 1.2};
    const auto ens = simulate_vasicek(params, {0.0}, 3, 9);
    for (std::size_t path = 0; path < 3; ++path) {
        CHECK(ens.rate(path, 0) == 0.7);
        CHECK(ens.integral(path, 0) == 0.0);
    }
    CHECK_THROWS_AS(simulate_vasicek(params, {}, 3, 9), std::domain_error);
    CHECK_THROWS_AS(simulate_vasicek(params, {0.0, 2.0, 1.0}, 3, 9), std::domain_error);
    CHECK_THROWS_AS(simulate_vasicek(params, {1.0, 2.0}, 3, 9), std::domain_error);
    CHECK_THROWS_AS(simulate_vasicek(params, {0.0, 1.0}, 0, 9), std::domain_error);
}

TEST_CASE("exact transition sampling reproduces the OU moments", "[markets]") {
    // With r0 = b the mean stays at b for all t.
    const VasicekParams params{1.5, 1.5};
    const std::size_t n = 10000;
    const auto ens = simulate_vasicek(params, uniform_time_grid(1.0, 64), n, 1234);
    std::vector<double> at_horizon(n);
    for (std::size_t i = 0; i < n; ++i) at_horizon[i] = ens.rate(i, ens.index_of(1.0));
    const auto sample = oracles::moments(at_horizon);
    const double se = std::sqrt(sample.variance / static_cast<double>(n));
    CHECK(std::abs(sample.mean - params.b) <= 4.0 * se);

    // Independent fine-step Euler-Maruyama oracle agrees on the mean.
    const auto euler = oracles::euler_maruyama_short_rate(params.r0, params.b, 1.0, 1e-3, n, 4321);
    const auto euler_moments = oracles::moments(euler);
    const double se_combined =
        std::sqrt((sample.variance + euler_moments.variance) / static_cast<double>(n));
    CHECK(std::abs(sample.mean - euler_moments.mean) <= 4.0 * se_combined);
}

TEST_CASE("exact transition sampling reproduces the OU variance", "[markets]") {
    const VasicekParams params{1.5, 1.5};
    const std::size_t n = 100000;
    const auto ens = simulate_vasicek(params, uniform_time_grid(1.0, 64), n, 5150);
    std::vector<double> at_horizon(n);
    for (std::size_t i = 0; i < n; ++i) at_horizon[i] = ens.rate(i, ens.index_of(1.0));
    const double variance = oracles::moments(at_horizon).variance;
    const double expected = 1.0 - std::exp(-2.0);  // stationary scale is sigma^2/(2 kappa) = 1
    CHECK(std::abs(variance / expected - 1.0) <= 0.05);
}

TEST_CASE("exact sampling matches Euler-Maruyama in distribution (KS)", "[markets]") {
    const VasicekParams params{1.0, 1.5};
    const std::size_t n = 10000;
    const auto ens = simulate_vasicek(params, uniform_time_grid(1.0, 64), n, 31337);
    std::vector<double> exact(n);
    for (std::size_t i = 0; i < n; ++i) exact[i] = ens.rate(i, ens.index_of(1.0));
    const auto euler =
        oracles::euler_maruyama_short_rate(params.r0, params.b, 1.0, 5e-4, n, 1999);
    const double d = oracles::ks_statistic(exact, euler);
    CHECK(d < oracles::ks_critical(0.01, n, n));
}

TEST_CASE("seed determinism and path independence", "[markets]") {
    const VasicekParams params{1.0, 1.5};
    const auto grid = uniform_time_grid(1.0, 32);
    const auto a = simulate_vasicek(params, grid, 500, 99);
    const auto b = simulate_vasicek(params, grid, 500, 99);
    CHECK(a.short_rate == b.short_rate);
    CHECK(a.integrated_rate == b.integrated_rate);

    const auto c = simulate_vasicek(params, grid, 500, 100);
    CHECK(a.short_rate != c.short_rate);

    // Adjacent paths share no state: terminal values are uncorrelated.
    const std::size_t k = a.index_of(1.0);
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    const std::size_t pairs = a.n_paths - 1;
    for (std::size_t i = 0; i + 1 < a.n_paths; ++i) {
        const double x = a.rate(i, k), y = a.rate(i + 1, k);
        sx += x; sy += y; sxy += x * y; sxx += x * x; syy += y * y;
    }
    const double n = static_cast<double>(pairs);
    const double corr = (sxy - sx * sy / n) /
                        std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
    CHECK(std::abs(corr) < 4.0 / std::sqrt(n));
}

TEST_CASE("trapezoid integral converges at second order on common paths", "[markets]") {
    // Strong drift curvature so the deterministic O(h^2) term dominates.
    const VasicekParams params{0.0, 20.0};
    const std::size_t n = 200000;
    const auto fine = simulate_vasicek(params, uniform_time_grid(1.0, 32), n, 17);
    const auto mid = subsample_ensemble(fine, 2);   // h = 1/16
    const auto coarse = subsample_ensemble(fine, 4);  // h = 1/8
    const std::size_t kf = fine.time_grid.size() - 1;
    const std::size_t km = mid.time_grid.size() - 1;
    const std::size_t kc = coarse.time_grid.size() - 1;
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d1 += coarse.integral(i, kc) - mid.integral(i, km);
        d2 += mid.integral(i, km) - fine.integral(i, kf);
    }
    const double ratio = d1 / d2;
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("vasicek market prices and deflator", "[markets]") {
    const VasicekParams params{1.0, 1.5};
    const auto market =
        market_from_vasicek(params, simulate_vasicek(params, uniform_time_grid(2.0, 64), 64, 7));
    for (std::size_t path : {std::size_t{0}, std::size_t{5}, std::size_t{63}})
        CHECK(market.log_price(path, 2.0, 2.0) == 0.0);
    // r_0 is a constant, so the time-0 curve is deterministic.
    for (std::size_t path = 1; path < 64; ++path)
        CHECK(market.log_price(path, 0.0, 30.0) == market.log_price(0, 0.0, 30.0));
    CHECK(market.log_deflator(3, 0.0) == 0.0);
    CHECK_THROWS_AS(market.log_price(0, 0.33, 10.0), std::domain_error);  // off the grid
    CHECK_THROWS_AS(market.log_price(0, 2.5, 10.0), std::domain_error);   // beyond the grid
}

TEST_CASE("ensemble serializes to columnar CSV with full precision", "[markets]") {
    const VasicekParams params{0.25, 0.5};
    const auto ens = simulate_vasicek(params, {0.0, 0.5, 1.0}, 2, 11);
    const std::string csv = ensemble_to_csv(ens);
    CHECK(csv.rfind("path_id,t,short_rate,integrated_rate\r\n", 0) == 0);
    // 6 data rows + header, CRLF-terminated.
    std::size_t rows = 0;
    for (std::size_t pos = 0; (pos = csv.find("\r\n", pos)) != std::string::npos; pos += 2) ++rows;
    CHECK(rows == 7);
    // A 17-significant-digit round trip preserves the double exactly.
    const std::string cell = format_sig17(ens.rate(1, 2));
    CHECK(std::stod(cell) == ens.rate(1, 2));
}
