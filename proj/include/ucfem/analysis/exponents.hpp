#pragma once

#include <cmath>
#include <optional>

#include "../error.hpp"

namespace ucfem::analysis {

/// Hoelder exponents of the three-ball inequality.
struct StabilityExponents {
    double alpha = 0.0;
    double beta = 0.0;
    std::optional<double> alpha1;
    std::optional<double> alpha2;
    std::optional<double> alpha_tilde;
};

/// Optimal exponent for radii r1 < r2 < r3:
/// beta = log(r3/r2) / log(r2/r1), alpha = beta / (1 + beta) = log(r3/r2) / log(r3/r1).
inline StabilityExponents optimal_alpha(double r1, double r2, double r3) {
    UCFEM_THROW_IF(!(r1 > 0.0 && r1 < r2 && r2 < r3), InvalidArgument, "optimal_alpha: 0 < r1 < r2 < r3 required");
    StabilityExponents e;
    const double outer = std::log(r3) - std::log(r2);
    const double inner = std::log(r2) - std::log(r1);
    e.beta = outer / inner;
    e.alpha = outer / (outer + inner);
    return e;
}

struct CombinedExponent {
    double alpha_tilde = 0.0;
    /// alpha1, alpha2 in [alpha, 1) with at least one strictly above alpha.
    bool premise = false;
    /// alpha_tilde > alpha.
    bool exceeds_alpha = false;
};

/// alpha_tilde = alpha1 / (1 + alpha1 - alpha2). `alpha` is the optimal
/// three-ball exponent the result is compared against.
inline CombinedExponent combined_exponent(double alpha1, double alpha2, std::optional<double> alpha = {}) {
    UCFEM_THROW_IF(!(alpha1 > 0.0 && alpha1 < 1.0 && alpha2 > 0.0 && alpha2 < 1.0), InvalidArgument,
                   "combined_exponent: alpha1, alpha2 must lie in (0,1)");
    CombinedExponent c;
    c.alpha_tilde = alpha1 / (1.0 + alpha1 - alpha2);
    if (alpha) {
        const double a = *alpha;
        c.premise = alpha1 >= a && alpha2 >= a && (alpha1 > a || alpha2 > a);
        c.exceeds_alpha = c.alpha_tilde > a;
    }
    return c;
}

}  // namespace ucfem::analysis
