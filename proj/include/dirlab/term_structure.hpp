#pragma once

// Conversions among zero-coupon bond prices, continuously compounded
// yields, and forward rates.
//
// All quantities live in abstract continuous time (units of years). To keep
// extreme maturities representable, every conversion is also available on
// log-prices; markets store log-prices as their primitive.

#include <cmath>
#include <stdexcept>
#include <string>

namespace dirlab {

namespace detail {

inline void require_ordered_interval(double t, double T, const char* who) {
    if (!(t >= 0.0) || !(T > t) || !std::isfinite(T))
        throw std::domain_error(std::string(who) + ": need 0 <= t < T");
}

inline void require_forward_ordering(double t, double t_prime, double T, const char* who) {
    if (!(t >= 0.0) || !(t_prime > t) || !(T > t_prime))
        throw std::domain_error(std::string(who) + ": need 0 <= t < t' < T");
}

}  // namespace detail

/// Yield over [t, T] implied by the log of the bond price.
inline double yield_from_log_price(double log_price, double t, double T) {
    detail::require_ordered_interval(t, T, "yield_from_log_price");
    return -log_price / (T - t);
}

/// Yield over [t, T] implied by a strictly positive bond price.
inline double yield_from_price(double price, double t, double T) {
    if (!(price > 0.0)) throw std::domain_error("yield_from_price: price must be > 0");
    return yield_from_log_price(std::log(price), t, T);
}

inline double log_price_from_yield(double yield, double t, double T) {
    detail::require_ordered_interval(t, T, "log_price_from_yield");
    return -yield * (T - t);
}

/// Bond price over [t, T] implied by a yield; inverse of yield_from_price.
inline double price_from_yield(double yield, double t, double T) {
    return std::exp(log_price_from_yield(yield, t, T));
}

/// Forward rate set at t for [t', T], from the log-prices of the t'- and
/// T-maturity bonds observed at t.
inline double forward_rate_from_log_prices(double log_price_short, double log_price_long,
                                           double t, double t_prime, double T) {
    detail::require_forward_ordering(t, t_prime, T, "forward_rate_from_log_prices");
    return (log_price_short - log_price_long) / (T - t_prime);
}

/// Forward rate from prices: p_short is the t'-bond price at t, p_long the
/// T-bond price at t.
inline double forward_rate_from_prices(double p_short, double p_long, double t, double t_prime,
                                       double T) {
    if (!(p_short > 0.0) || !(p_long > 0.0))
        throw std::domain_error("forward_rate_from_prices: prices must be > 0");
    return forward_rate_from_log_prices(std::log(p_short), std::log(p_long), t, t_prime, T);
}

/// Forward rate as an affine combination of the two yields observed at t:
/// r_long is the yield to T, r_short the yield to t'. Agrees with
/// forward_rate_from_prices on consistent inputs.
inline double forward_rate_from_yields(double r_long, double r_short, double t, double t_prime,
                                       double T) {
    detail::require_forward_ordering(t, t_prime, T, "forward_rate_from_yields");
    const double w = T - t_prime;
    return ((T - t) / w) * r_long - ((t_prime - t) / w) * r_short;
}

}  // namespace dirlab
