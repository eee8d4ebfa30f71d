#include "arotnep/ellipsoid.hpp"

#include "arotnep/errors.hpp"

#include <cmath>
#include <numbers>

namespace arotnep {

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double prob_exceedance(double beta) {
    if (!(beta >= 0.0)) throw DomainError("prob_exceedance: beta must be nonnegative");
    return standard_normal_cdf(-beta);
}

double beta_for_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("beta_for_quantile: p must lie in (0, 1)");

    // Bracket, bisect to a coarse root, then polish with Newton steps.
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (standard_normal_cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (int i = 0; i < 8; ++i) {
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
        if (pdf <= 0.0) break;
        const double next = x - (standard_normal_cdf(x) - p) / pdf;
        if (!(next > lo && next < hi) || next == x) break;
        x = next;
    }
    return x;
}

double soyster_beta(int n, double z) {
    if (n < 1) throw DomainError("soyster_beta: n must be at least 1");
    if (!(z > 0.0)) throw DomainError("soyster_beta: z must be positive");
    return z * std::sqrt(static_cast<double>(n));
}

double std_from_half_width(double half_width, double z) {
    if (!(z > 0.0)) throw DomainError("std_from_half_width: z must be positive");
    if (!(half_width >= 0.0)) throw DomainError("std_from_half_width: half width must be nonnegative");
    return half_width / z;
}

} // namespace arotnep
