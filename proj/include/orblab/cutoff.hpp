#pragma once

#include "orblab/common.hpp"

namespace orblab {

/// Nonincreasing C^1 cutoff: 1 on [0, r/2], cubic smoothstep down to 0 at r.
/// The slope bound sup|chi'| = 3/r is attained exactly at the midpoint.
inline double cutoff(double r, double t) {
    if (t <= 0.5 * r) return 1.0;
    if (t >= r) return 0.0;
    const double tau = (t - 0.5 * r) / (0.5 * r);
    return 1.0 - 3.0 * tau * tau + 2.0 * tau * tau * tau;
}

inline double cutoff_slope(double r, double t) {
    if (t <= 0.5 * r || t >= r) return 0.0;
    const double tau = (t - 0.5 * r) / (0.5 * r);
    return (-6.0 * tau + 6.0 * tau * tau) / (0.5 * r);
}

} // namespace orblab
