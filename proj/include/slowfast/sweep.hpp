#pragma once

// Bifurcation sweep of the frozen-excitability system (epsilon = 0): steady
// squared amplitude reached from a small and a large initial radius for each
// sigma on a grid, next to the closed-form cycle radii.

#include "slowfast/integrator.hpp"
#include "slowfast/model.hpp"
#include "slowfast/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace slowfast {

struct SteadyState {
    double r = 0.0;
    double t = 0.0;
    bool converged = false;
};

/// Integrates until r changes by less than `tolerance` over one rotation period
/// 2 pi / omega. The run is capped at 2000/epsilon when epsilon > 0, otherwise
/// at cfg.horizon.
inline SteadyState steady_radius(const SystemState& initial, const ModelParams& p, const IntegratorConfig& cfg,
                                 double tolerance = 1e-9) {
    cfg.validate();
    const double cap = p.epsilon() > 0 ? 2000.0 / p.epsilon() : cfg.horizon;
    const auto period_steps =
        std::max<std::int64_t>(1, std::llround(2.0 * std::numbers::pi / p.omega() / cfg.dt));
    const auto max_steps = std::llround(cap / cfg.dt);

    SystemState s = initial;
    double r_prev = s.r();
    for (std::int64_t k = 1; k <= max_steps; ++k) {
        s = step(s, p, cfg.dt);
        s.t = initial.t + static_cast<double>(k) * cfg.dt;
        if (k % period_steps == 0) {
            const double r = s.r();
            if (std::abs(r - r_prev) < tolerance) return {r, s.t, true};
            r_prev = r;
        }
    }
    return {s.r(), s.t, false};
}

struct SweepRow {
    double sigma = 0.0;
    SteadyState low;
    SteadyState high;
    double closed_form_stable = 0.0;               // outer cycle if it exists, else 0 (equilibrium)
    std::optional<double> closed_form_unstable;    // inner cycle, only between the fold and 0
};

struct SweepOptions {
    double r_small = 1e-3;
    /// Large start is max(r_large_min, 1.5 (a + gamma)).
    double r_large_min = 4.0;
    double tolerance = 1e-9;
};

inline std::vector<double> linear_grid(double lo, double hi, int steps) {
    std::vector<double> g;
    if (steps <= 1) {
        g.push_back(lo);
        return g;
    }
    g.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) g.push_back(lo + (hi - lo) * i / (steps - 1));
    return g;
}

inline std::vector<SweepRow> bifurcation_sweep(const ModelParams& base, std::span<const double> sigma_grid,
                                               const IntegratorConfig& per_point, const SweepOptions& opts = {}) {
    const ModelParams p = base.with_epsilon(0.0);
    per_point.validate();
    std::vector<SweepRow> rows(sigma_grid.size());
    parallel_for(sigma_grid.size(), [&](std::size_t i) {
        const double sigma = sigma_grid[i];
        SweepRow row;
        row.sigma = sigma;
        const auto outer = outer_cycle_radius(sigma, p);
        row.closed_form_stable = outer.value_or(0.0);
        row.closed_form_unstable = inner_cycle_radius(sigma, p);

        const double r_large = std::max(opts.r_large_min, 1.5 * outer.value_or(0.0));
        const auto start = [&](double r) {
            const double c = std::sqrt(r / 2.0);
            return SystemState{0.0, c, c, sigma};
        };
        row.low = steady_radius(start(opts.r_small), p, per_point, opts.tolerance);
        row.high = steady_radius(start(r_large), p, per_point, opts.tolerance);
        rows[i] = row;
    });
    return rows;
}

} // namespace slowfast
