#pragma once

// Slow-fast oscillator model: a Hopf-type fast subsystem in (x, y) whose
// excitability sigma drifts under a cubic slow law with equilibria c1 < c2 < c3.
//
//   x'     = -omega y + x f(x, y, sigma) + zeta_x
//   y'     =  omega x + y f(x, y, sigma) + zeta_y
//   sigma' = -epsilon (sigma - c1)(sigma - c2)(sigma - c3) + zeta_sigma
//
//   f(x, y, sigma) = sigma + 2ab (x^2 + y^2) - b (x^2 + y^2)^2
//
// With epsilon = 0 sigma is frozen and the fast subsystem alone is recovered.

#include "slowfast/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace slowfast {

class ModelParams {
public:
    ModelParams(double omega, double a, double b, double c1, double c2, double c3,
                double epsilon)
        : omega_(omega), a_(a), b_(b), c_{c1, c2, c3}, epsilon_(epsilon) {
        require_finite(omega, "params.omega");
        require_finite(a, "params.a");
        require_finite(b, "params.b");
        require_finite(c1, "params.c1");
        require_finite(c2, "params.c2");
        require_finite(c3, "params.c3");
        require_finite(epsilon, "params.epsilon");
        if (!(omega > 0)) throw ValidationError("params.omega", "must be > 0");
        if (!(a > 0)) throw ValidationError("params.a", "must be > 0");
        if (!(b > 0)) throw ValidationError("params.b", "must be > 0");
        if (!(c1 < c2)) throw ValidationError("params.c2", "requires c1 < c2");
        if (!(c2 < c3)) throw ValidationError("params.c3", "requires c2 < c3");
        if (!(epsilon >= 0)) throw ValidationError("params.epsilon", "must be >= 0");
    }

    double omega() const noexcept { return omega_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double epsilon() const noexcept { return epsilon_; }
    double c1() const noexcept { return c_[0]; }
    double c2() const noexcept { return c_[1]; }
    double c3() const noexcept { return c_[2]; }

    /// 1-based, matching the equilibrium labels.
    double c(int i) const { return c_.at(static_cast<std::size_t>(i - 1)); }

    /// Saddle-node value -a^2 b where the two cycles of the frozen system are born.
    double fold() const noexcept { return -a_ * a_ * b_; }

    ModelParams with_epsilon(double epsilon) const {
        return {omega_, a_, b_, c_[0], c_[1], c_[2], epsilon};
    }
    ModelParams with_omega(double omega) const {
        return {omega, a_, b_, c_[0], c_[1], c_[2], epsilon_};
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    static void require_finite(double v, const char* field) {
        if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
    }

    double omega_;
    double a_;
    double b_;
    std::array<double, 3> c_;
    double epsilon_;
};

struct SystemState {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;

    double r() const noexcept { return x * x + y * y; }
    bool finite() const noexcept {
        return std::isfinite(t) && std::isfinite(x) && std::isfinite(y) && std::isfinite(sigma);
    }

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Additive inputs (zeta_x, zeta_y, zeta_sigma).
struct Forcing {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;

    Forcing& operator+=(const Forcing& o) noexcept {
        x += o.x;
        y += o.y;
        sigma += o.sigma;
        return *this;
    }
    friend bool operator==(const Forcing&, const Forcing&) = default;
};

struct Derivative {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

/// h(r, sigma) = sigma + 2ab r - b r^2, the radial growth rate as a function of r = x^2 + y^2.
inline double radial_gain(double r, double sigma, const ModelParams& p) noexcept {
    return sigma + 2.0 * p.a() * p.b() * r - p.b() * r * r;
}

inline double f_value(double x, double y, double sigma, const ModelParams& p) noexcept {
    return radial_gain(x * x + y * y, sigma, p);
}

inline double slow_rate(double sigma, const ModelParams& p) noexcept {
    return -p.epsilon() * (sigma - p.c1()) * (sigma - p.c2()) * (sigma - p.c3());
}

inline Derivative vector_field(const SystemState& s, const ModelParams& p,
                               const Forcing& forcing = {}) noexcept {
    const double f = f_value(s.x, s.y, s.sigma, p);
    return {-p.omega() * s.y + s.x * f + forcing.x,
            p.omega() * s.x + s.y * f + forcing.y,
            slow_rate(s.sigma, p) + forcing.sigma};
}

/// sqrt(a^2 + sigma/b), clamped at zero below the fold. Only meaningful where a
/// cycle exists; callers check existence first.
inline double cycle_offset(double sigma, const ModelParams& p) noexcept {
    return std::sqrt(std::max(0.0, p.a() * p.a() + sigma / p.b()));
}

/// Squared radius a + gamma of the outer cycle of the frozen system, if it exists.
inline std::optional<double> outer_cycle_radius(double sigma, const ModelParams& p) noexcept {
    if (sigma < p.fold()) return std::nullopt;
    return p.a() + cycle_offset(sigma, p);
}

/// Squared radius a - gamma of the inner (unstable) cycle, if it exists.
inline std::optional<double> inner_cycle_radius(double sigma, const ModelParams& p) noexcept {
    if (!(sigma > p.fold() && sigma < 0.0)) return std::nullopt;
    return p.a() - cycle_offset(sigma, p);
}

// ---------------------------------------------------------------------------
// Attractor catalog

enum class Stability { stable, unstable, nonexistent };

inline const char* to_string(Stability s) noexcept {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::nonexistent: return "nonexistent";
    }
    return "?";
}

struct CycleEntry {
    Stability stability = Stability::nonexistent;
    std::optional<double> squared_radius;

    bool exists() const noexcept { return stability != Stability::nonexistent; }
};

/// Objects attached to one slow equilibrium sigma = c_i: the equilibrium E_i at
/// the origin, the outer cycle M_i and the inner cycle M_i'.
struct AttractorEntry {
    int index = 0;
    double c = 0.0;
    double gamma = 0.0;
    Stability equilibrium = Stability::stable;
    CycleEntry outer;
    CycleEntry inner;
};

struct AttractorCatalog {
    std::array<AttractorEntry, 3> entries;

    const AttractorEntry& operator[](int i) const { return entries.at(static_cast<std::size_t>(i - 1)); }
};

/// Classifies the catalog by parameter regime. Index 2 sits on the unstable slow
/// equilibrium, so everything attached to it is unstable.
/// Throws BoundaryCase when some c_i equals -a^2 b or 0 exactly.
inline AttractorCatalog attractor_catalog(const ModelParams& p) {
    AttractorCatalog cat;
    for (int i = 1; i <= 3; ++i) {
        const double ci = p.c(i);
        if (ci == p.fold() || ci == 0.0) throw BoundaryCase(i, ci);

        AttractorEntry e;
        e.index = i;
        e.c = ci;
        e.gamma = cycle_offset(ci, p);

        if (ci < p.fold()) {
            e.equilibrium = Stability::stable;
        } else if (ci < 0.0) {
            e.equilibrium = Stability::stable;
            e.outer = {Stability::stable, p.a() + e.gamma};
            e.inner = {Stability::unstable, p.a() - e.gamma};
        } else {
            e.equilibrium = Stability::unstable;
            e.outer = {Stability::stable, p.a() + e.gamma};
        }

        if (i == 2) {
            e.equilibrium = Stability::unstable;
            if (e.outer.exists()) e.outer.stability = Stability::unstable;
            if (e.inner.exists()) e.inner.stability = Stability::unstable;
        }
        cat.entries[static_cast<std::size_t>(i - 1)] = e;
    }
    return cat;
}

} // namespace slowfast
