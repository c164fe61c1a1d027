// Command-line experiment runner. One subcommand per experiment plus
// `replay`; every run writes a JSON report, a CSV table and a manifest that
// `replay` can verify bit for bit.
//
// Exit codes: 0 all asserted properties pass, 1 usage/config error,
// 2 property violation (or replay divergence).

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dirlab/runner.hpp"

namespace {

struct CliOptions {
    dirlab::ExperimentConfig config;
    std::string grid_text = "25x2x6";
};

void add_market_options(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--market", opts.config.market.kind,
                    "Market kind: vasicek | dir-violation | min-exp | exp-neg-t2 | exp-t2 | flat")
        ->capture_default_str();
    cmd->add_option("--r0", opts.config.market.r0, "Vasicek initial short rate")
        ->capture_default_str();
    cmd->add_option("--b", opts.config.market.b, "Vasicek mean-reversion level")
        ->capture_default_str();
    cmd->add_option("--rate", opts.config.market.rate, "Flat-market rate")->capture_default_str();
}

void add_common_options(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--paths", opts.config.n_paths, "Monte Carlo paths")->capture_default_str();
    cmd->add_option("--seed", opts.config.master_seed,
                    "Master seed (env DIRLAB_SEED overrides when set)")
        ->capture_default_str();
    cmd->add_option("--delta", opts.config.delta, "Tail level for quantile evidence")
        ->capture_default_str();
    cmd->add_option("--steps-per-year", opts.config.steps_per_year, "Simulation grid resolution")
        ->capture_default_str();
    cmd->add_option("--out", opts.config.out_dir, "Output directory")->capture_default_str();
}

void add_grid_option(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--grid", opts.grid_text, "Maturity grid STARTxFACTORxCOUNT, e.g. 25x2x6")
        ->capture_default_str();
}

int execute(CliOptions& opts) {
    if (const char* env_seed = std::getenv("DIRLAB_SEED")) {
        try {
            opts.config.master_seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            std::cerr << "config error in 'seed': DIRLAB_SEED is not an integer\n";
            return 1;
        }
    }
    try {
        opts.config.grid = dirlab::GridSpec::parse(opts.grid_text);
        const auto result = dirlab::run(opts.config);
        std::cout << (result.manifest.all_pass() ? "PASS" : "FAIL") << "  "
                  << opts.config.experiment << " on market '" << opts.config.market.kind
                  << "'  ->  " << result.report_path << "\n";
        for (const auto& check : result.manifest.checks)
            std::cout << "  " << (check.pass ? "pass" : "FAIL") << "  " << check.name << "\n";
        return result.exit_code;
    } catch (const dirlab::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-maturity term-structure laboratory"};
    app.require_subcommand(1);

    CliOptions opts;
    std::string manifest_path;

    auto* dir_yields = app.add_subcommand(
        "dir-yields", "Boundedness of T*(R_s - R_t) over a maturity grid");
    dir_yields->add_option("--s", opts.config.s, "Earlier time s")->capture_default_str();
    dir_yields->add_option("--t", opts.config.t, "Later time t")->capture_default_str();
    add_market_options(dir_yields, opts);
    add_grid_option(dir_yields, opts);
    add_common_options(dir_yields, opts);

    auto* dir_forwards = app.add_subcommand(
        "dir-forwards", "Boundedness of T*(F_{s,s'} - F_{t,t'}) over a maturity grid");
    dir_forwards->add_option("--s", opts.config.s, "Earlier set time s")->capture_default_str();
    dir_forwards->add_option("--s2", opts.config.s_prime, "Investment start s' > s")
        ->capture_default_str();
    dir_forwards->add_option("--t", opts.config.t, "Later set time t")->capture_default_str();
    dir_forwards->add_option("--t2", opts.config.t_prime, "Investment start t' > t")
        ->capture_default_str();
    add_market_options(dir_forwards, opts);
    add_grid_option(dir_forwards, opts);
    add_common_options(dir_forwards, opts);

    auto* equivalence = app.add_subcommand(
        "equivalence", "Forward/yield equivalence: T*(F_{t,t'} - R_t) and the exact identity");
    equivalence->add_option("--t", opts.config.t, "Set time t")->capture_default_str();
    equivalence->add_option("--t2", opts.config.t_prime, "Investment start t' > t")
        ->capture_default_str();
    add_market_options(equivalence, opts);
    add_grid_option(equivalence, opts);
    add_common_options(equivalence, opts);

    auto* deflator = app.add_subcommand(
        "deflator-check", "Supermartingale deflator verification suite");
    deflator->add_option("--s", opts.config.s, "Restart time s")->capture_default_str();
    deflator->add_option("--t", opts.config.t, "Check time t")->capture_default_str();
    deflator->add_option("--T", opts.config.maturity, "Bond maturity T")->capture_default_str();
    deflator->add_option("--ell", opts.config.ells, "Markov tail levels")->delimiter(',');
    add_market_options(deflator, opts);
    add_common_options(deflator, opts);

    auto* arbitrage = app.add_subcommand(
        "arbitrage", "Two-bond zero-cost arbitrage scan on a deterministic market");
    arbitrage->add_option("--t", opts.config.t, "Entry time t")->capture_default_str();
    arbitrage->add_option("--T", opts.config.maturity, "Long-bond maturity T >= t+2")
        ->capture_default_str();
    add_market_options(arbitrage, opts);
    add_common_options(arbitrage, opts);

    auto* tail_bound = app.add_subcommand(
        "tail-bound", "Markov tail bound on deflated price ratios");
    tail_bound->add_option("--s", opts.config.s, "Earlier time s")->capture_default_str();
    tail_bound->add_option("--t", opts.config.t, "Later time t")->capture_default_str();
    tail_bound->add_option("--T", opts.config.maturity, "Bond maturity T")->capture_default_str();
    tail_bound->add_option("--ell", opts.config.ells, "Tail levels ell")->delimiter(',');
    add_market_options(tail_bound, opts);
    add_common_options(tail_bound, opts);

    auto* replay = app.add_subcommand("replay", "Re-run a manifest and verify CSV outputs");
    replay->add_option("manifest", manifest_path, "Path to a *_manifest.json")->required();

    for (auto* cmd : {dir_yields, dir_forwards, equivalence, deflator, arbitrage, tail_bound})
        cmd->callback([cmd, &opts]() { opts.config.experiment = cmd->get_name(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (replay->parsed()) {
        std::string message;
        const int code = dirlab::replay(manifest_path, &message);
        std::cout << (code == 0 ? "PASS" : "FAIL") << "  replay: " << message << "\n";
        return code;
    }
    return execute(opts);
}
