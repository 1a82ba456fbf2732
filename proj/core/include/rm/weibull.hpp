#pragma once

#include <cmath>

namespace rm {

/// Exponential-law breakdown life model on a Weibull lifetime distribution.
/// The cumulative failure probability of an asset of effective age tau hours
/// is H(tau) = 1 - exp(-nu * [alpha * exp(gamma * tau)]^s).
struct WeibullLife {
    double nu = 0.0;
    double alpha = 1.0;
    double gamma = 0.0;
    double shape = 1.0;
};

inline double failure_probability(const WeibullLife& life, double tau_hours) {
    const double k = life.alpha * std::exp(life.gamma * tau_hours);
    return 1.0 - std::exp(-life.nu * std::pow(k, life.shape));
}

/// Probability of failing within the next dt hours given survival to tau.
inline double interval_failure_probability(const WeibullLife& life, double tau_hours, double dt_hours) {
    const double h0 = failure_probability(life, tau_hours);
    const double h1 = failure_probability(life, tau_hours + dt_hours);
    if (h0 >= 1.0) return 1.0;
    const double p = (h1 - h0) / (1.0 - h0);
    return std::min(1.0, std::max(0.0, p));
}

} // namespace rm
