#pragma once

// Recovery-rate bound and the excitability estimator obtained by inverting it.

#include "slowfast/errors.hpp"
#include "slowfast/model.hpp"

#include <cmath>
#include <string>

namespace slowfast {

/// Squared radii at or below this are too small for a meaningful logarithm.
inline constexpr double radius_floor = 1e-12;

/// mu = -2 (sigma + 2ab r0 - b r0^2). Not clipped: mu <= 0 means no guaranteed decay.
inline double mu_bound(double sigma, double r0, const ModelParams& p) noexcept {
    return -2.0 * radial_gain(r0, sigma, p);
}

struct RecoveryBound {
    double mu = 0.0;
    double r0 = 0.0;

    double envelope(double t) const noexcept { return t == 0.0 ? r0 : r0 * std::exp(-t * mu); }
};

inline RecoveryBound recovery_bound(double sigma, double r0, const ModelParams& p) noexcept {
    return {mu_bound(sigma, r0, p), r0};
}

/// Excitability implied by a decay from r0 to rt over duration t, assuming the
/// recovery bound is tight: (1/2t) ln(rt/r0) - 2ab r0 + b r0^2.
inline double estimate_sigma(double r0, double rt, double t, const ModelParams& p) {
    if (!(t > 0)) throw PreconditionError("estimate_sigma: duration must be > 0");
    if (!(r0 > radius_floor) || !(rt > radius_floor))
        throw DegenerateRadius("estimate_sigma: squared radius at or below floor (r0=" +
                               std::to_string(r0) + ", rt=" + std::to_string(rt) + ")");
    return std::log(rt / r0) / (2.0 * t) - 2.0 * p.a() * p.b() * r0 + p.b() * r0 * r0;
}

} // namespace slowfast
