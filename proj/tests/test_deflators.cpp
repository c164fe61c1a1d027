#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dirlab/deflators.hpp"
#include "dirlab/markets.hpp"

using namespace dirlab;

TEST_CASE("min-exp deflated prices are nonincreasing", "[deflators]") {
    const auto market = build_min_exp_market();
    const auto report = check_deterministic_supermartingale(market, default_monotonicity_triples());
    CHECK(report.all_pass());
    CHECK(report.market == "min-exp");
}

TEST_CASE("rising savings-account market deflates to a constant", "[deflators]") {
    const auto market = build_deterministic_emm_market(SavingsKind::exp_t_squared);
    const auto report = check_deterministic_supermartingale(market, default_monotonicity_triples());
    CHECK(report.all_pass());
    // Y_t P_t^T = exp(-T^2) is constant in t: the martingale case.
    const double log_l_s = market.log_deflator(0, 1.0) + market.log_price(0, 1.0, 6.0);
    const double log_l_t = market.log_deflator(0, 4.0) + market.log_price(0, 4.0, 6.0);
    CHECK_THAT(log_l_s, Catch::Matchers::WithinAbs(-36.0, 1e-12));
    CHECK_THAT(log_l_t, Catch::Matchers::WithinAbs(-36.0, 1e-12));
}

TEST_CASE("falling savings-account market also admits its deflator", "[deflators]") {
    const auto market = build_deterministic_emm_market(SavingsKind::exp_neg_t_squared);
    CHECK(check_deterministic_supermartingale(market, default_monotonicity_triples()).all_pass());
}

TEST_CASE("no deflator survives the price jump market", "[deflators]") {
    const auto market = build_dir_violation_market();
    CHECK_THROWS_AS(check_deterministic_supermartingale(market, default_monotonicity_triples()),
                    std::domain_error);

    // Trial Y = 1: a brute-force scan over a lattice finds a violation.
    auto trial = [](std::size_t, double) { return 0.0; };
    std::vector<Triple> lattice;
    for (double s : {0.0, 0.25, 0.5, 0.75})
        for (double t : {1.0, 1.5, 2.0})
            for (double T : {2.0, 3.0})
                if (t <= T) lattice.push_back({s, t, T});
    const auto report = check_deterministic_supermartingale(market, lattice, trial);
    CHECK(!report.all_pass());

    // The known witness: L jumps from 1 to e^3 across (0.5, 1, 2).
    const auto witness = check_deterministic_supermartingale(market, {{0.5, 1.0, 2.0}}, trial);
    CHECK(!witness.checks.front().pass);
    CHECK_THAT(witness.checks.front().estimate, Catch::Matchers::WithinAbs(3.0, 1e-12));
}

TEST_CASE("monotonicity check validates its triples", "[deflators]") {
    const auto market = build_min_exp_market();
    CHECK_THROWS_AS(check_deterministic_supermartingale(market, {{2.0, 1.0, 3.0}}),
                    std::domain_error);
    CHECK_THROWS_AS(check_deterministic_supermartingale(market, {{1.0, 2.0, 1.5}}),
                    std::domain_error);
}

TEST_CASE("unconditional martingale check passes on the vasicek market", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    const auto grid = uniform_time_grid(1.0, 64);
    const std::size_t n = 100000;
    const double allowance =
        measure_discretization_allowance(params, grid, {0.5, 1.0}, 5.0, n, 21);
    const auto market = market_from_vasicek(params, simulate_vasicek(params, grid, n, 22));
    const auto report = check_martingale_unconditional(market, {0.0, 0.5, 1.0}, 5.0, allowance);
    CHECK(report.all_pass());

    // t = 0 is exact: no sampling enters.
    CHECK_THAT(report.checks.front().estimate,
               Catch::Matchers::WithinAbs(report.checks.front().reference, 1e-13));
    // The common-path allowance isolates trapezoid bias: it is far below SE.
    CHECK(allowance < report.checks.back().se);
}

TEST_CASE("unconditional check detects a drifting deflator", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    const auto grid = uniform_time_grid(1.0, 64);
    const std::size_t n = 400000;
    const double allowance =
        measure_discretization_allowance(params, grid, {0.5, 1.0}, 1.0, 100000, 41);
    const auto market = market_from_vasicek(params, simulate_vasicek(params, grid, n, 42));
    CHECK(check_martingale_unconditional(market, {0.5, 1.0}, 1.0, allowance).all_pass());

    const auto corrupted = inject_deflator_drift(market, 0.01);
    const auto report = check_martingale_unconditional(corrupted, {0.5, 1.0}, 1.0, allowance);
    CHECK(!report.all_pass());
}

TEST_CASE("unconditional check detects a 2% price bias", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    const auto grid = uniform_time_grid(0.5, 64);
    const std::size_t n = 250000;
    const double allowance =
        measure_discretization_allowance(params, grid, {0.5}, 2.0, 100000, 31);
    const auto market = market_from_vasicek(params, simulate_vasicek(params, grid, n, 32));
    CHECK(check_martingale_unconditional(market, {0.5}, 2.0, allowance).all_pass());

    const auto corrupted = inject_price_bias(market, 1.02);
    const auto report = check_martingale_unconditional(corrupted, {0.5}, 2.0, allowance);
    CHECK(!report.all_pass());
}

TEST_CASE("restart-conditional check passes at representative states", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    const auto report =
        check_supermartingale_restart(params, 1.0, 2.0, 6.0, {0.05, 0.5, 0.95}, 10000, 51);
    CHECK(report.all_pass());
    CHECK(report.checks.size() == 3);
}

TEST_CASE("restart-conditional check detects a 2% price bias", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    CHECK(check_supermartingale_restart(params, 1.0, 1.5, 3.0, {0.05, 0.5, 0.95}, 160000, 52)
              .all_pass());
    const auto corrupted = check_supermartingale_restart(params, 1.0, 1.5, 3.0, {0.05, 0.5, 0.95},
                                                         160000, 52, 64, std::log(1.02));
    for (const auto& check : corrupted.checks) CHECK(!check.pass);
}

TEST_CASE("restart check validates its time points", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    CHECK_THROWS_AS(check_supermartingale_restart(params, 2.0, 1.0, 3.0, {0.5}, 100, 1),
                    std::domain_error);
    CHECK_THROWS_AS(check_supermartingale_restart(params, 1.0, 2.0, 1.5, {0.5}, 100, 1),
                    std::domain_error);
}

TEST_CASE("markov tail bound on the vasicek market", "[deflators]") {
    const VasicekParams params{1.0, 1.5};
    const auto market =
        market_from_vasicek(params, simulate_vasicek(params, uniform_time_grid(2.0, 64), 100000, 13));
    const auto table = markov_tail_check(market, 1.0, 2.0, 10.0, {1.0, 2.0, 3.0});
    CHECK(table.all_pass());
    for (const auto& row : table.rows) CHECK(row.p_hat <= std::exp(-row.ell) + 3.0 * row.se);
}

TEST_CASE("markov tail bound is trivial on deterministic deflated markets", "[deflators]") {
    const auto market = build_min_exp_market();
    const auto table = markov_tail_check(market, 1.0, 2.0, 10.0, {0.5, 1.0, 2.0});
    CHECK(table.all_pass());
    for (const auto& row : table.rows) CHECK(row.p_hat == 0.0);

    // ell = 0: the bound is 1 and passes trivially.
    const auto zero = markov_tail_check(market, 1.0, 2.0, 10.0, {0.0});
    CHECK(zero.rows.front().bound >= 1.0);
    CHECK(zero.all_pass());
}

TEST_CASE("markov tail check requires a deflator and ordered times", "[deflators]") {
    CHECK_THROWS_AS(markov_tail_check(build_dir_violation_market(), 1.0, 2.0, 10.0, {1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(markov_tail_check(build_min_exp_market(), 2.0, 1.0, 10.0, {1.0}),
                    std::domain_error);
}

TEST_CASE("deflator reports serialize with the documented fields", "[deflators]") {
    const auto market = build_min_exp_market();
    const auto report = check_deterministic_supermartingale(market, {{0.5, 1.0, 3.0}});
    const auto j = to_json(report);
    CHECK(j.at("market") == "min-exp");
    const auto& check = j.at("checks").at(0);
    for (const char* key : {"kind", "s", "t", "T", "estimate", "se", "bound", "pass"})
        CHECK(check.contains(key));
}
