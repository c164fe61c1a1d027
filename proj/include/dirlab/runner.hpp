#pragma once

// Reproducible experiment runner behind the command-line tool: a validated
// ExperimentConfig, a run() that executes one experiment and writes a JSON
// report, a CSV table and a manifest (all atomically), and a replay() that
// re-runs a manifest and asserts bit-identical CSV output.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dirlab/deflators.hpp"
#include "dirlab/dir_checks.hpp"
#include "dirlab/markets.hpp"
#include "dirlab/report_io.hpp"
#include "dirlab/version.hpp"

namespace dirlab {

/// Invalid configuration; `field` names the offending input.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error("config error in '" + field + "': " + message),
          field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct MarketSpec {
    std::string kind = "vasicek";  // vasicek | dir-violation | min-exp | exp-neg-t2 | exp-t2 | flat
    double r0 = 1.0;
    double b = 1.5;
    double rate = 0.03;  // flat market only
};

/// Geometric maturity grid, written A x B x C on the command line:
/// start A, factor B, C points.
struct GridSpec {
    double start = 25.0;
    double factor = 2.0;
    std::size_t count = 6;

    std::vector<double> values() const { return geometric_grid(start, factor, count); }

    static GridSpec parse(const std::string& text) {
        GridSpec spec;
        char sep1 = 0, sep2 = 0;
        double count_raw = 0.0;
        std::istringstream in(text);
        if (!(in >> spec.start >> sep1 >> spec.factor >> sep2 >> count_raw) || sep1 != 'x' ||
            sep2 != 'x' || (in >> std::ws, !in.eof()) || count_raw < 1.0 ||
            count_raw != std::floor(count_raw))
            throw ConfigError("grid", "expected STARTxFACTORxCOUNT, got '" + text + "'");
        spec.count = static_cast<std::size_t>(count_raw);
        return spec;
    }
};

struct ExperimentConfig {
    std::string experiment;  // dir-yields | dir-forwards | equivalence
                             // | deflator-check | arbitrage | tail-bound
    MarketSpec market;
    double s = 1.0;
    double t = 2.0;
    double s_prime = 1.5;
    double t_prime = 2.5;
    double maturity = 10.0;  // T for arbitrage, tail-bound and deflator-check
    GridSpec grid;
    std::size_t n_paths = 10000;
    std::uint64_t master_seed = 42;
    double delta = 0.05;
    std::vector<double> ells = {1.0, 2.0, 3.0};
    std::size_t steps_per_year = 64;
    std::string out_dir = ".";
};

inline nlohmann::json to_json(const ExperimentConfig& config) {
    return {{"experiment", config.experiment},
            {"market",
             {{"kind", config.market.kind},
              {"r0", config.market.r0},
              {"b", config.market.b},
              {"rate", config.market.rate}}},
            {"s", config.s},
            {"t", config.t},
            {"s_prime", config.s_prime},
            {"t_prime", config.t_prime},
            {"maturity", config.maturity},
            {"grid",
             {{"start", config.grid.start},
              {"factor", config.grid.factor},
              {"count", config.grid.count}}},
            {"n_paths", config.n_paths},
            {"master_seed", config.master_seed},
            {"delta", config.delta},
            {"ells", config.ells},
            {"steps_per_year", config.steps_per_year},
            {"out_dir", config.out_dir}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    try {
        config.experiment = j.at("experiment").get<std::string>();
        config.market.kind = j.at("market").at("kind").get<std::string>();
        config.market.r0 = j.at("market").at("r0").get<double>();
        config.market.b = j.at("market").at("b").get<double>();
        config.market.rate = j.at("market").at("rate").get<double>();
        config.s = j.at("s").get<double>();
        config.t = j.at("t").get<double>();
        config.s_prime = j.at("s_prime").get<double>();
        config.t_prime = j.at("t_prime").get<double>();
        config.maturity = j.at("maturity").get<double>();
        config.grid.start = j.at("grid").at("start").get<double>();
        config.grid.factor = j.at("grid").at("factor").get<double>();
        config.grid.count = j.at("grid").at("count").get<std::size_t>();
        config.n_paths = j.at("n_paths").get<std::size_t>();
        config.master_seed = j.at("master_seed").get<std::uint64_t>();
        config.delta = j.at("delta").get<double>();
        config.ells = j.at("ells").get<std::vector<double>>();
        config.steps_per_year = j.at("steps_per_year").get<std::size_t>();
        config.out_dir = j.at("out_dir").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config", e.what());
    }
    return config;
}

struct NamedCheck {
    std::string name;
    bool pass = false;
};

struct RunManifest {
    std::string artifact_version = kArtifactVersion;
    ExperimentConfig config;
    std::vector<std::string> outputs;  // file names relative to out_dir
    std::vector<NamedCheck> checks;
    double duration_seconds = 0.0;

    bool all_pass() const {
        for (const auto& check : checks)
            if (!check.pass) return false;
        return true;
    }
};

inline nlohmann::json to_json(const RunManifest& manifest) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& check : manifest.checks)
        checks.push_back({{"name", check.name}, {"pass", check.pass}});
    return {{"artifact_version", manifest.artifact_version},
            {"config", to_json(manifest.config)},
            {"outputs", manifest.outputs},
            {"checks", std::move(checks)},
            {"duration_seconds", manifest.duration_seconds},
            {"all_pass", manifest.all_pass()}};
}

struct RunResult {
    int exit_code = 0;  // 0 pass, 2 property violation
    RunManifest manifest;
    std::string report_path;
    std::string manifest_path;
};

namespace detail {

/// Simulation horizon the experiment needs: the largest observation time.
inline double config_horizon(const ExperimentConfig& config) {
    double horizon = std::max(config.s, config.t);
    if (config.experiment == "dir-forwards")
        horizon = std::max({horizon, config.s_prime, config.t_prime});
    return horizon;
}

inline MarketModel build_market(const ExperimentConfig& config) {
    const auto& spec = config.market;
    if (spec.kind == "dir-violation") return build_dir_violation_market();
    if (spec.kind == "min-exp") return build_min_exp_market();
    if (spec.kind == "exp-neg-t2")
        return build_deterministic_emm_market(SavingsKind::exp_neg_t_squared);
    if (spec.kind == "exp-t2") return build_deterministic_emm_market(SavingsKind::exp_t_squared);
    if (spec.kind == "flat") return build_flat_market(spec.rate);
    if (spec.kind == "vasicek") {
        VasicekParams params{spec.r0, spec.b};
        auto grid = uniform_time_grid(config_horizon(config), config.steps_per_year);
        return market_from_vasicek(
            params, simulate_vasicek(params, std::move(grid), config.n_paths, config.master_seed));
    }
    throw ConfigError("market", "unknown market kind '" + spec.kind + "'");
}

struct ExperimentOutput {
    nlohmann::json report;
    std::string table_csv;
    std::vector<NamedCheck> checks;
};

inline ExperimentOutput run_dir_experiment(const ExperimentConfig& config,
                                           const MarketModel& market) {
    const auto maturities = config.grid.values();
    DirExperimentReport report;
    if (config.experiment == "dir-yields")
        report = yield_dir_experiment(market, config.s, config.t, maturities, config.delta);
    else if (config.experiment == "equivalence")
        report = forward_yield_equivalence_experiment(market, config.t, config.t_prime, maturities,
                                                      config.delta);
    else
        report = forward_dir_experiment(market, config.s, config.s_prime, config.t, config.t_prime,
                                        maturities, config.delta);

    ExperimentOutput out;
    out.report = to_json(report);
    out.table_csv = family_table_csv(report.family, config.delta);
    out.checks.push_back({config.experiment, report.pass});
    if (report.identity) out.checks.push_back({"exact-identity", report.identity->pass});
    return out;
}

inline ExperimentOutput run_arbitrage(const ExperimentConfig& config, const MarketModel& market) {
    const auto cert = arbitrage_scan(market, config.t, config.maturity);
    const auto golsch = golsch_condition_check(market, config.t, config.maturity);
    ExperimentOutput out;
    out.report = {{"market", market.id},
                  {"t", config.t},
                  {"T", config.maturity},
                  {"certificate", cert ? to_json(*cert) : nlohmann::json(nullptr)},
                  {"golsch", to_json(golsch)}};
    CsvBuilder csv({"t", "T", "entry_cost", "payoff", "certified"});
    if (cert)
        csv.row({CsvBuilder::cell(config.t), CsvBuilder::cell(config.maturity),
                 CsvBuilder::cell(cert->entry_cost), CsvBuilder::cell(cert->payoff), "true"});
    else
        csv.row({CsvBuilder::cell(config.t), CsvBuilder::cell(config.maturity), "", "", "false"});
    out.table_csv = csv.str();
    out.checks.push_back(
        {"certificate-zero-cost", !cert || std::abs(cert->entry_cost) <= 1e-12});
    return out;
}

inline ExperimentOutput run_tail_bound(const ExperimentConfig& config, const MarketModel& market) {
    const auto table = markov_tail_check(market, config.s, config.t, config.maturity, config.ells);
    ExperimentOutput out;
    out.report = to_json(table);
    CsvBuilder csv({"ell", "p_hat", "se", "bound", "pass"});
    for (const auto& row : table.rows) {
        csv.row({CsvBuilder::cell(row.ell), CsvBuilder::cell(row.p_hat), CsvBuilder::cell(row.se),
                 CsvBuilder::cell(row.bound), CsvBuilder::cell(row.pass)});
        out.checks.push_back({"markov-ell-" + format_sig17(row.ell), row.pass});
    }
    out.table_csv = csv.str();
    return out;
}

inline ExperimentOutput run_deflator_check(const ExperimentConfig& config,
                                           const MarketModel& market) {
    ExperimentOutput out;
    DeflatorReport combined;
    combined.market = market.id;
    nlohmann::json markov_json(nullptr);

    if (market.character == MarketCharacter::deterministic) {
        if (!market.has_deflator())
            throw ConfigError("market", "market '" + market.id + "' declares no deflator");
        combined = check_deterministic_supermartingale(market, default_monotonicity_triples());
    } else {
        const VasicekParams params = *market.vasicek;
        const std::vector<double> t_grid{config.s, config.t};
        const double allowance = measure_discretization_allowance(
            params, market.ensemble->time_grid, t_grid, config.maturity, config.n_paths,
            config.master_seed);
        combined = check_martingale_unconditional(market, t_grid, config.maturity, allowance);
        auto restart =
            check_supermartingale_restart(params, config.s, config.t, config.maturity,
                                          {0.05, 0.5, 0.95}, config.n_paths, config.master_seed,
                                          config.steps_per_year);
        for (auto& check : restart.checks) combined.checks.push_back(std::move(check));
        const auto markov =
            markov_tail_check(market, config.s, config.t, config.maturity, config.ells);
        markov_json = to_json(markov);
        for (const auto& row : markov.rows)
            out.checks.push_back({"markov-ell-" + format_sig17(row.ell), row.pass});
    }

    out.report = {{"deflator", to_json(combined)}, {"markov", std::move(markov_json)}};
    CsvBuilder csv({"kind", "s", "t", "T", "estimate", "reference", "se", "allowance", "bound",
                    "pass"});
    for (const auto& check : combined.checks) {
        csv.row({check.kind, CsvBuilder::cell(check.s), CsvBuilder::cell(check.t),
                 CsvBuilder::cell(check.T), CsvBuilder::cell(check.estimate),
                 CsvBuilder::cell(check.reference), CsvBuilder::cell(check.se),
                 CsvBuilder::cell(check.allowance), CsvBuilder::cell(check.bound),
                 CsvBuilder::cell(check.pass)});
        out.checks.push_back({check.kind + "@t=" + format_sig17(check.t), check.pass});
    }
    out.table_csv = csv.str();
    return out;
}

}  // namespace detail

/// Execute one experiment: builds the market, runs the named experiment,
/// writes <experiment>_report.json, <experiment>_table.csv and
/// <experiment>_manifest.json under config.out_dir. Returns exit code 0
/// when every asserted property passed and 2 otherwise.
inline RunResult run(const ExperimentConfig& config) {
    static const std::vector<std::string> kKnown{"dir-yields", "dir-forwards", "equivalence",
                                                 "deflator-check", "arbitrage", "tail-bound"};
    if (std::find(kKnown.begin(), kKnown.end(), config.experiment) == kKnown.end())
        throw ConfigError("experiment", "unknown experiment kind '" + config.experiment + "'");
    if (!(config.delta > 0.0 && config.delta < 0.5))
        throw ConfigError("delta", "delta must be in (0, 0.5)");
    if (config.n_paths == 0) throw ConfigError("paths", "need at least one path");
    if (config.steps_per_year == 0) throw ConfigError("steps-per-year", "must be positive");

    const auto started = std::chrono::steady_clock::now();
    const MarketModel market = detail::build_market(config);

    detail::ExperimentOutput output;
    if (config.experiment == "arbitrage")
        output = detail::run_arbitrage(config, market);
    else if (config.experiment == "tail-bound")
        output = detail::run_tail_bound(config, market);
    else if (config.experiment == "deflator-check")
        output = detail::run_deflator_check(config, market);
    else
        output = detail::run_dir_experiment(config, market);

    RunResult result;
    result.manifest.config = config;
    result.manifest.checks = output.checks;
    const std::string prefix = config.experiment;
    const std::string table_name = prefix + "_table.csv";
    const std::string report_name = prefix + "_report.json";
    const std::string manifest_name = prefix + "_manifest.json";
    result.manifest.outputs = {table_name, report_name};

    const std::filesystem::path dir(config.out_dir);
    nlohmann::json report{{"config", to_json(config)},
                          {"artifact_version", kArtifactVersion},
                          {"manifest", manifest_name},
                          {"result", std::move(output.report)}};
    write_file_atomic((dir / table_name).string(), output.table_csv);
    write_file_atomic((dir / report_name).string(), report.dump(2) + "\n");

    result.manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_file_atomic((dir / manifest_name).string(), to_json(result.manifest).dump(2) + "\n");

    result.report_path = (dir / report_name).string();
    result.manifest_path = (dir / manifest_name).string();
    result.exit_code = result.manifest.all_pass() ? 0 : 2;
    return result;
}

/// Re-run the experiment recorded in a manifest and compare every CSV
/// output byte for byte. Returns 0 when identical, 2 when any file
/// differs, 1 on missing/unreadable/mismatched-version manifests.
inline int replay(const std::string& manifest_path, std::string* message = nullptr) {
    auto say = [&](const std::string& text) {
        if (message) *message = text;
    };
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const std::exception& e) {
        say(std::string("cannot read manifest: ") + e.what());
        return 1;
    }
    if (!manifest.contains("artifact_version") ||
        manifest["artifact_version"].get<std::string>() != kArtifactVersion) {
        say("artifact version mismatch");
        return 1;
    }

    ExperimentConfig config;
    std::vector<std::string> outputs;
    try {
        config = config_from_json(manifest.at("config"));
        outputs = manifest.at("outputs").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
        say(std::string("malformed manifest: ") + e.what());
        return 1;
    }

    const std::filesystem::path original_dir =
        std::filesystem::path(manifest_path).parent_path().empty()
            ? std::filesystem::path(".")
            : std::filesystem::path(manifest_path).parent_path();

    // Fresh scratch directory for the re-run.
    std::filesystem::path scratch;
    for (int attempt = 0;; ++attempt) {
        scratch = std::filesystem::temp_directory_path() /
                  ("dirlab-replay-" + std::to_string(::getpid()) + "-" + std::to_string(attempt));
        if (!std::filesystem::exists(scratch)) break;
    }
    std::filesystem::create_directories(scratch);
    config.out_dir = scratch.string();

    int code = 0;
    try {
        run(config);
        for (const auto& name : outputs) {
            if (std::filesystem::path(name).extension() != ".csv") continue;
            const std::string original = read_file((original_dir / name).string());
            const std::string fresh = read_file((scratch / name).string());
            if (original != fresh) {
                say("output '" + name + "' differs from the recorded run");
                code = 2;
                break;
            }
        }
        if (code == 0) say("replay reproduced all CSV outputs bit-identically");
    } catch (const std::exception& e) {
        say(std::string("replay failed: ") + e.what());
        code = 1;
    }
    std::error_code ignore;
    std::filesystem::remove_all(scratch, ignore);
    return code;
}

}  // namespace dirlab
