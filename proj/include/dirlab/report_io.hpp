#pragma once

// Report serialization: RFC-4180 CSV tables with a mandatory header row,
// atomic file writes (temp file + rename, so failed runs leave no partial
// output), and JSON adapters for the asymptotics evidence objects.
// Numbers are printed with 17 significant digits so a replay can be
// compared byte for byte.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirlab/asymptotics.hpp"
#include "dirlab/markets.hpp"

namespace dirlab {

inline std::string format_sig17(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

/// Minimal RFC-4180 writer; fields here are numeric or simple tokens, so no
/// quoting is ever needed.
class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header) { append_row(header); }

    void row(const std::vector<std::string>& cells) { append_row(cells); }

    const std::string& str() const { return out_; }

    static std::string cell(double value) { return format_sig17(value); }
    static std::string cell(bool value) { return value ? "true" : "false"; }

private:
    void append_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += "\r\n";
    }

    std::string out_;
};

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
        if (!stream) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        stream.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!stream) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
    std::ifstream stream(path, std::ios::binary);
    if (!stream) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << stream.rdbuf();
    return out.str();
}

/// Columnar dump of an ensemble: one row per (path, grid point).
inline std::string ensemble_to_csv(const ScenarioEnsemble& ensemble) {
    CsvBuilder csv({"path_id", "t", "short_rate", "integrated_rate"});
    for (std::size_t path = 0; path < ensemble.n_paths; ++path)
        for (std::size_t k = 0; k < ensemble.time_grid.size(); ++k)
            csv.row({std::to_string(path), CsvBuilder::cell(ensemble.time_grid[k]),
                     CsvBuilder::cell(ensemble.rate(path, k)),
                     CsvBuilder::cell(ensemble.integral(path, k))});
    return csv.str();
}

inline nlohmann::json to_json(const TailQuantileCurve& curve) {
    return {{"delta", curve.delta},
            {"T", curve.maturities},
            {"quantile_low", curve.lower},
            {"quantile_high", curve.upper},
            {"quantile_low_se", curve.lower_se},
            {"quantile_high_se", curve.upper_se}};
}

inline nlohmann::json to_json(const BoundednessVerdict& verdict) {
    nlohmann::json out{{"direction", to_string(verdict.direction)},
                       {"verdict", to_string(verdict.verdict)},
                       {"delta", verdict.delta},
                       {"rate", verdict.rate_label},
                       {"tail_fraction", verdict.params.tail_fraction},
                       {"slack_factor", verdict.params.slack_factor},
                       {"tail_extreme", verdict.tail_extreme},
                       {"reference", verdict.reference},
                       {"threshold", verdict.threshold},
                       {"evidence", to_json(verdict.evidence)}};
    if (verdict.direction == Direction::two_sided) {
        out["above"] = to_string(verdict.above);
        out["below"] = to_string(verdict.below);
    }
    return out;
}

inline nlohmann::json to_json(const PlimsupBand& band) {
    return {{"delta", band.delta},
            {"band", band.band},
            {"band_maturity", band.band_maturity},
            {"band_se", band.band_se}};
}

/// CSV view of a tail-quantile curve: (T, quantile_low, quantile_high).
inline std::string curve_to_csv(const TailQuantileCurve& curve) {
    CsvBuilder csv({"T", "quantile_low", "quantile_high"});
    for (std::size_t j = 0; j < curve.maturities.size(); ++j)
        csv.row({CsvBuilder::cell(curve.maturities[j]), CsvBuilder::cell(curve.lower[j]),
                 CsvBuilder::cell(curve.upper[j])});
    return csv.str();
}

/// CSV table (T, q_low, q_high, mean, se) for a statistic family.
inline std::string family_table_csv(const StatisticFamily& family, double delta) {
    family.validate();
    const TailQuantileCurve curve = tail_quantile_curve(family, delta);
    CsvBuilder csv({"T", "q_low", "q_high", "mean", "se"});
    for (std::size_t j = 0; j < family.maturities.size(); ++j) {
        const auto& sample = family.samples[j];
        double sum = 0.0;
        for (double x : sample) sum += x;
        const double mean = sum / static_cast<double>(sample.size());
        double var = 0.0;
        for (double x : sample) var += (x - mean) * (x - mean);
        var = sample.size() > 1 ? var / static_cast<double>(sample.size() - 1) : 0.0;
        const double se = std::sqrt(var / static_cast<double>(sample.size()));
        csv.row({CsvBuilder::cell(family.maturities[j]), CsvBuilder::cell(curve.lower[j]),
                 CsvBuilder::cell(curve.upper[j]), CsvBuilder::cell(mean), CsvBuilder::cell(se)});
    }
    return csv.str();
}

}  // namespace dirlab
