#pragma once

#include "slowfast/errors.hpp"
#include "slowfast/estimator.hpp"
#include "slowfast/integrator.hpp"
#include "slowfast/model.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace slowfast {

// ---------------------------------------------------------------------------
// Region of attraction of E1 = (0, 0, c1), valid when -a^2 b < c1 < c2 < 0 < c3:
//
//   R1 = { x^2 + y^2 < a - sqrt(a^2 + sigma/b),  c1 <= sigma < c2 }
//   R2 = { sigma < c1 }

enum class Region { R1, R2, outside };

inline const char* to_string(Region r) noexcept {
    switch (r) {
    case Region::R1: return "R1";
    case Region::R2: return "R2";
    case Region::outside: return "outside";
    }
    return "?";
}

struct RegionMembership {
    Region label = Region::outside;
    /// Slack of the binding inequality; positive inside, negative or zero outside.
    double margin = 0.0;

    bool inside() const noexcept { return label != Region::outside; }
};

inline bool in_attraction_regime(const ModelParams& p) noexcept {
    return p.fold() < p.c1() && p.c1() < p.c2() && p.c2() < 0.0 && 0.0 < p.c3();
}

inline void require_attraction_regime(const ModelParams& p) {
    if (!in_attraction_regime(p))
        throw RegimeError("params", "region of attraction requires -a^2 b < c1 < c2 < 0 < c3");
}

/// Radial bound a - sqrt(a^2 + sigma/b) of R1 at the given sigma.
inline double r1_radial_bound(double sigma, const ModelParams& p) noexcept {
    return p.a() - std::sqrt(p.a() * p.a() + sigma / p.b());
}

inline RegionMembership region_membership(const SystemState& s, const ModelParams& p) {
    require_attraction_regime(p);
    if (s.sigma < p.c1()) return {Region::R2, p.c1() - s.sigma};
    if (s.sigma >= p.c2()) return {Region::outside, p.c2() - s.sigma};
    const double margin = r1_radial_bound(s.sigma, p) - s.r();
    return {margin > 0 ? Region::R1 : Region::outside, margin};
}

/// Membership with a tolerance on the binding inequality.
inline bool in_region_within(const SystemState& s, const ModelParams& p, double tol) {
    const auto m = region_membership(s, p);
    return m.inside() || m.margin >= -tol;
}

// ---------------------------------------------------------------------------
// Recovery envelope

struct EnvelopeReport {
    bool holds = true;
    std::optional<double> first_violation;
    /// First sample at which r >= a - sqrt(a^2 + sigma/b); empty if never.
    std::optional<double> exit_time;
    /// Time up to which the envelope was checked (exit time or horizon end).
    double checked_until = 0.0;
    std::size_t samples_checked = 0;
};

inline constexpr double envelope_slack = 1e-8;

/// Verifies r(t) <= exp(-t mu(t)) r(0) + slack r(0) at every sample before the
/// first exit from the shrinking-radius region, with mu(t) = mu_bound(sigma(t), r(0)).
/// Requires c2 < sigma(0) < 0 and r(0) < a - sqrt(a^2 + sigma(0)/b).
inline EnvelopeReport check_envelope(const Trajectory& traj, const ModelParams& p) {
    if (traj.empty()) throw PreconditionError("check_envelope: empty trajectory");
    const SystemState& s0 = traj.front();
    if (!(s0.sigma > p.c2() && s0.sigma < 0.0))
        throw PreconditionError("check_envelope: requires c2 < sigma(0) < 0");
    const double r0 = s0.r();
    if (!(r0 < r1_radial_bound(s0.sigma, p)))
        throw PreconditionError("check_envelope: requires r(0) < a - sqrt(a^2 + sigma(0)/b)");

    EnvelopeReport rep;
    rep.checked_until = traj.back().t;
    for (const auto& sample : traj.samples) {
        const SystemState& s = sample.state;
        const double r = s.r();
        if (r >= r1_radial_bound(s.sigma, p)) {
            rep.exit_time = s.t;
            rep.checked_until = s.t;
            break;
        }
        const double t = s.t - s0.t;
        const double bound = r0 * std::exp(-t * mu_bound(s.sigma, r0, p)) + envelope_slack * r0;
        ++rep.samples_checked;
        if (r > bound && rep.holds) {
            rep.holds = false;
            rep.first_violation = s.t;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Recovery time

struct RecoveryTime {
    double time = 0.0;
    bool reached = true;
};

/// First sample time (relative to the trajectory start) after which r stays at
/// or below fraction * r(0) for the rest of the horizon. When never reached the
/// horizon length is returned with `reached = false`.
inline RecoveryTime recovery_time(const Trajectory& traj, double fraction) {
    if (!(fraction > 0 && fraction < 1)) throw PreconditionError("recovery_time: fraction must be in (0, 1)");
    if (traj.empty()) throw PreconditionError("recovery_time: empty trajectory");
    const double t0 = traj.front().t;
    const double level = fraction * traj.front().r();

    // Scan backwards for the last sample above the level.
    const auto& v = traj.samples;
    std::size_t i = v.size();
    while (i > 0 && v[i - 1].state.r() <= level) --i;
    if (i == v.size()) return {traj.back().t - t0, false};
    return {v[i].state.t - t0, true};
}

} // namespace slowfast
