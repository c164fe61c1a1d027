#pragma once

// Finite-sample surrogates for boundedness in probability: empirical tail
// probabilities, order-statistic quantiles, tail-quantile curves over a
// maturity grid, and three-way bounded/unbounded/inconclusive verdicts.
//
// The underlying notions are asymptotic; any verdict from finitely many
// maturities is a documented heuristic, and reports echo the decision
// parameters that produced them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dirlab {

/// Samples of a statistic at each maturity of a grid, paired by scenario:
/// entry i at every maturity comes from scenario i.
struct StatisticFamily {
    std::vector<double> maturities;
    std::vector<std::vector<double>> samples;  // samples[j] has one value per scenario

    std::size_t sample_size() const { return samples.empty() ? 0 : samples.front().size(); }

    void validate() const {
        if (maturities.size() != samples.size())
            throw std::domain_error("StatisticFamily: maturities/samples size mismatch");
        if (maturities.empty()) throw std::domain_error("StatisticFamily: empty grid");
        for (std::size_t j = 0; j + 1 < maturities.size(); ++j)
            if (!(maturities[j] < maturities[j + 1]))
                throw std::domain_error("StatisticFamily: maturities must be increasing");
        const std::size_t n = samples.front().size();
        if (n == 0) throw std::domain_error("StatisticFamily: empty sample");
        for (const auto& column : samples)
            if (column.size() != n)
                throw std::domain_error("StatisticFamily: unequal sample sizes across maturities");
    }
};

/// Geometric maturity grid {start, start*factor, ...} with `count` points.
inline std::vector<double> geometric_grid(double start, double factor, std::size_t count) {
    if (!(start > 0.0) || !(factor > 1.0) || count == 0)
        throw std::domain_error("geometric_grid: need start > 0, factor > 1, count >= 1");
    std::vector<double> grid(count);
    double value = start;
    for (std::size_t j = 0; j < count; ++j, value *= factor) grid[j] = value;
    return grid;
}

struct TailProbEstimate {
    double p_hat = 0.0;
    double standard_error = 0.0;
};

/// Empirical P[x > ell] with its binomial standard error.
inline TailProbEstimate empirical_tail_prob(const std::vector<double>& sample, double ell) {
    if (sample.empty()) throw std::domain_error("empirical_tail_prob: empty sample");
    const auto n = static_cast<double>(sample.size());
    double count = 0.0;
    for (double x : sample) count += (x > ell) ? 1.0 : 0.0;
    const double p = count / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

namespace detail {

/// Order-statistic index for level q: the ceil(q*n)-th order statistic,
/// clamped to [1, n]. The small fuzz guards against q*n landing a hair
/// above an integer in floating point.
inline std::size_t quantile_index(double q, std::size_t n) {
    if (!(q > 0.0 && q < 1.0)) throw std::domain_error("quantile level must be in (0,1)");
    const double raw = std::ceil(q * static_cast<double>(n) - 1e-9);
    const auto k = static_cast<std::size_t>(std::max(1.0, raw));
    return std::min(k, n);
}

inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    return sorted[quantile_index(q, sorted.size()) - 1];
}

/// Distribution-free standard error of the empirical q-quantile, from the
/// spread of the order statistics one binomial standard deviation away.
inline double sorted_quantile_se(const std::vector<double>& sorted, double q) {
    const auto n = sorted.size();
    if (n < 2) return 0.0;
    const auto k = static_cast<double>(quantile_index(q, n));
    const double spread = std::sqrt(static_cast<double>(n) * q * (1.0 - q));
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor(k - spread)));
    const auto hi = static_cast<std::size_t>(std::min(static_cast<double>(n), std::ceil(k + spread)));
    return 0.5 * (sorted[hi - 1] - sorted[lo - 1]);
}

}  // namespace detail

/// The ceil(q*n)-th order statistic of the sample (lower order-statistic
/// convention, no interpolation).
inline double empirical_quantile(std::vector<double> sample, double q) {
    if (sample.empty()) throw std::domain_error("empirical_quantile: empty sample");
    const std::size_t k = detail::quantile_index(q, sample.size());
    std::nth_element(sample.begin(), sample.begin() + (k - 1), sample.end());
    return sample[k - 1];
}

enum class Direction { above, below, two_sided };
enum class Boundedness { bounded, unbounded, inconclusive };

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::above: return "above";
        case Direction::below: return "below";
        default: return "two_sided";
    }
}

inline const char* to_string(Boundedness b) {
    switch (b) {
        case Boundedness::bounded: return "bounded";
        case Boundedness::unbounded: return "unbounded";
        default: return "inconclusive";
    }
}

/// Per-maturity empirical delta- and (1-delta)-quantiles of a statistic,
/// with order-statistic standard errors. The evidence object behind every
/// boundedness verdict.
struct TailQuantileCurve {
    double delta = 0.05;
    std::vector<double> maturities;
    std::vector<double> lower, upper;        // q_delta and q_{1-delta}
    std::vector<double> lower_se, upper_se;
};

struct DecisionParams {
    double tail_fraction = 0.5;  // share of the grid treated as "the tail"
    double slack_factor = 2.0;   // tolerated growth over the full-grid reference
};

struct BoundednessVerdict {
    Direction direction = Direction::above;
    Boundedness verdict = Boundedness::inconclusive;
    Boundedness above = Boundedness::inconclusive;  // filled for two_sided
    Boundedness below = Boundedness::inconclusive;  // filled for two_sided
    double delta = 0.05;
    DecisionParams params;
    std::string rate_label = "1";
    TailQuantileCurve evidence;
    // Decision diagnostics for the driving direction (above uses the upper
    // curve; below uses the mirrored lower curve).
    double tail_extreme = 0.0;
    double reference = 0.0;
    double threshold = 0.0;
};

namespace detail {

inline std::size_t tail_count(std::size_t m, double tail_fraction) {
    const auto c = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(m) - 1e-9));
    return std::min(std::max<std::size_t>(c, 1), m);
}

/// Core decision rule on an upper-quantile curve c_j (boundedness above):
///   bounded      if max over the grid tail of c_j stays within
///                slack_factor * max(|median over the full grid|, 1);
///   unbounded    if the tail max exceeds that threshold and the last three
///                points increase by more than 4x the quantile noise;
///   inconclusive otherwise.
inline void decide_above(const std::vector<double>& c, const std::vector<double>& se,
                         const DecisionParams& params, Boundedness& verdict, double& tail_extreme,
                         double& reference, double& threshold) {
    const std::size_t m = c.size();
    std::vector<double> sorted_c(c);
    std::sort(sorted_c.begin(), sorted_c.end());
    reference = sorted_quantile(sorted_c, 0.5);
    threshold = params.slack_factor * std::max(std::abs(reference), 1.0);

    const std::size_t tail = tail_count(m, params.tail_fraction);
    tail_extreme = c[m - tail];
    for (std::size_t j = m - tail; j < m; ++j) tail_extreme = std::max(tail_extreme, c[j]);

    if (tail_extreme <= threshold) {
        verdict = Boundedness::bounded;
        return;
    }
    // Escaped the threshold: call it unbounded only if the last three grid
    // points rise monotonically by more than the sampling noise.
    bool rising = true;
    for (std::size_t j = m - 3; j + 1 < m; ++j) {
        const double margin = 4.0 * std::sqrt(se[j] * se[j] + se[j + 1] * se[j + 1]);
        if (!(c[j + 1] - c[j] > margin)) rising = false;
    }
    verdict = rising ? Boundedness::unbounded : Boundedness::inconclusive;
}

}  // namespace detail

/// Tail-quantile curve of the (already rate-normalized) family.
inline TailQuantileCurve tail_quantile_curve(const StatisticFamily& family, double delta) {
    family.validate();
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("tail_quantile_curve: delta must be in (0,1)");
    TailQuantileCurve curve;
    curve.delta = delta;
    curve.maturities = family.maturities;
    const std::size_t m = family.maturities.size();
    curve.lower.resize(m);
    curve.upper.resize(m);
    curve.lower_se.resize(m);
    curve.upper_se.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> sorted(family.samples[j]);
        std::sort(sorted.begin(), sorted.end());
        curve.lower[j] = detail::sorted_quantile(sorted, delta);
        curve.upper[j] = detail::sorted_quantile(sorted, 1.0 - delta);
        curve.lower_se[j] = detail::sorted_quantile_se(sorted, delta);
        curve.upper_se[j] = detail::sorted_quantile_se(sorted, 1.0 - delta);
    }
    return curve;
}

/// Three-way boundedness verdict for the family normalized by the rate
/// alpha (one strictly positive value per maturity; pass all-ones for the
/// O_P(1) question and 1/T values for the O_P(1/T) question).
inline BoundednessVerdict op_bound_verdict(const StatisticFamily& family,
                                           const std::vector<double>& alpha, double delta,
                                           Direction direction, DecisionParams params = {},
                                           std::string rate_label = "1") {
    family.validate();
    if (alpha.size() != family.maturities.size())
        throw std::domain_error("op_bound_verdict: rate sequence does not match the grid");
    for (double a : alpha)
        if (!(a > 0.0)) throw std::domain_error("op_bound_verdict: rate values must be > 0");
    if (family.maturities.size() < 6)
        throw std::domain_error("op_bound_verdict: need at least 6 maturities for a verdict");

    StatisticFamily scaled;
    scaled.maturities = family.maturities;
    scaled.samples.resize(family.samples.size());
    for (std::size_t j = 0; j < family.samples.size(); ++j) {
        scaled.samples[j].resize(family.samples[j].size());
        for (std::size_t i = 0; i < family.samples[j].size(); ++i)
            scaled.samples[j][i] = family.samples[j][i] / alpha[j];
    }

    BoundednessVerdict result;
    result.direction = direction;
    result.delta = delta;
    result.params = params;
    result.rate_label = std::move(rate_label);
    result.evidence = tail_quantile_curve(scaled, delta);

    if (direction == Direction::two_sided) {
        BoundednessVerdict up = op_bound_verdict(family, alpha, delta, Direction::above, params,
                                                 result.rate_label);
        BoundednessVerdict down = op_bound_verdict(family, alpha, delta, Direction::below, params,
                                                   result.rate_label);
        result.above = up.verdict;
        result.below = down.verdict;
        if (up.verdict == Boundedness::bounded && down.verdict == Boundedness::bounded)
            result.verdict = Boundedness::bounded;
        else if (up.verdict == Boundedness::unbounded || down.verdict == Boundedness::unbounded)
            result.verdict = Boundedness::unbounded;
        else
            result.verdict = Boundedness::inconclusive;
        result.tail_extreme = up.tail_extreme;
        result.reference = up.reference;
        result.threshold = up.threshold;
        return result;
    }

    const std::size_t m = scaled.maturities.size();
    std::vector<double> c(m), se(m);
    if (direction == Direction::above) {
        c = result.evidence.upper;
        se = result.evidence.upper_se;
    } else {
        // Boundedness below of xi is boundedness above of -xi.
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> negated(scaled.samples[j].size());
            for (std::size_t i = 0; i < negated.size(); ++i) negated[i] = -scaled.samples[j][i];
            std::sort(negated.begin(), negated.end());
            c[j] = detail::sorted_quantile(negated, 1.0 - delta);
            se[j] = detail::sorted_quantile_se(negated, 1.0 - delta);
        }
    }
    detail::decide_above(c, se, params, result.verdict, result.tail_extreme, result.reference,
                         result.threshold);
    return result;
}

/// Tail maximum of the upper-quantile curve, the finite-grid surrogate for
/// an upper limit in probability.
struct PlimsupBand {
    double delta = 0.05;
    double band = 0.0;           // max of q_{1-delta} over the grid tail
    double band_maturity = 0.0;  // maturity attaining the max
    double band_se = 0.0;        // quantile SE at that maturity
    TailQuantileCurve curve;
};

inline std::vector<PlimsupBand> plimsup_band(const StatisticFamily& family,
                                             const std::vector<double>& deltas,
                                             double tail_fraction = 0.5) {
    family.validate();
    std::vector<PlimsupBand> bands;
    bands.reserve(deltas.size());
    for (double delta : deltas) {
        PlimsupBand band;
        band.delta = delta;
        band.curve = tail_quantile_curve(family, delta);
        const std::size_t m = family.maturities.size();
        const std::size_t tail = detail::tail_count(m, tail_fraction);
        std::size_t best = m - tail;
        for (std::size_t j = m - tail; j < m; ++j)
            if (band.curve.upper[j] > band.curve.upper[best]) best = j;
        band.band = band.curve.upper[best];
        band.band_maturity = family.maturities[best];
        band.band_se = band.curve.upper_se[best];
        bands.push_back(std::move(band));
    }
    return bands;
}

}  // namespace dirlab
