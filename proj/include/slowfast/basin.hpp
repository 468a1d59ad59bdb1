#pragma once

// Monte-Carlo check of the region of attraction of E1 = (0, 0, c1). Initial
// conditions are drawn per stratum, integrated without forcing, and classified
// by where they end up.

#include "slowfast/analysis.hpp"
#include "slowfast/integrator.hpp"
#include "slowfast/model.hpp"
#include "slowfast/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

enum class Stratum {
    r1,           // uniform in R1
    r2,           // uniform in a bounded box of R2
    r1_boundary,  // on the R1 radial bound minus an offset
    above_c2,     // sigma(0) in (c2, c3), (x, y) != 0
};

inline const char* to_string(Stratum s) noexcept {
    switch (s) {
    case Stratum::r1: return "R1";
    case Stratum::r2: return "R2";
    case Stratum::r1_boundary: return "R1_boundary";
    case Stratum::above_c2: return "above_c2";
    }
    return "?";
}

inline bool inside_region_stratum(Stratum s) noexcept { return s != Stratum::above_c2; }

struct BasinOptions {
    IntegratorConfig integrator{1e-2, 500.0, 10};
    /// Euclidean distance to (0, 0, c1) counted as converged.
    double tolerance = 1e-4;
    /// Allowed violation of the region inequality at a sample.
    double margin_tolerance = 1e-6;
    double boundary_offset = 1e-3;
    /// Fraction of n_samples drawn for each diagnostic stratum.
    double diagnostic_fraction = 0.1;
    /// R2 is unbounded; its box is sigma in [fold - (c1 - fold), c1) and
    /// x^2 + y^2 in [0, r2_radius_factor * a).
    double r2_radius_factor = 2.0;
};

struct BasinStart {
    Stratum stratum;
    SystemState state;
};

struct BasinOutcome {
    SystemState final_state;
    bool converged = false;
    bool reached_outer_cycle = false;
    bool stayed_in_region = true;
    double max_violation = 0.0;
};

struct StratumReport {
    Stratum stratum = Stratum::r1;
    std::size_t samples = 0;
    std::size_t converged = 0;
    std::size_t reached_outer_cycle = 0;
    std::size_t left_region = 0;
    double max_violation = 0.0;

    double converged_fraction() const noexcept {
        return samples ? static_cast<double>(converged) / static_cast<double>(samples) : 0.0;
    }
};

struct BasinReport {
    std::vector<StratumReport> strata;
    std::vector<BasinStart> starts;
    std::vector<BasinOutcome> outcomes;

    const StratumReport* find(Stratum s) const noexcept {
        for (const auto& r : strata)
            if (r.stratum == s) return &r;
        return nullptr;
    }
};

/// Draws the stratified initial conditions. n_samples is split evenly between
/// R1 and R2; each diagnostic stratum gets diagnostic_fraction * n_samples.
inline std::vector<BasinStart> basin_starts(const ModelParams& p, std::size_t n_samples, std::uint64_t seed,
                                            const BasinOptions& opts = {}) {
    require_attraction_regime(p);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto angle = [&] { return 2.0 * std::numbers::pi * unit(rng); };
    const auto at = [](double r, double theta, double sigma) {
        return SystemState{0.0, std::sqrt(r) * std::cos(theta), std::sqrt(r) * std::sin(theta), sigma};
    };

    std::vector<BasinStart> starts;
    const std::size_t n_r1 = n_samples / 2;
    const std::size_t n_r2 = n_samples - n_r1;
    const auto n_diag = static_cast<std::size_t>(std::llround(opts.diagnostic_fraction * static_cast<double>(n_samples)));

    for (std::size_t i = 0; i < n_r1; ++i) {
        const double sigma = p.c1() + (p.c2() - p.c1()) * unit(rng);
        // Area-uniform in the disk: squared radius uniform on [0, bound).
        const double r = r1_radial_bound(sigma, p) * unit(rng);
        starts.push_back({Stratum::r1, at(r, angle(), sigma)});
    }
    const double sigma_lo = p.fold() - (p.c1() - p.fold());
    for (std::size_t i = 0; i < n_r2; ++i) {
        const double sigma = sigma_lo + (p.c1() - sigma_lo) * unit(rng);
        const double r = opts.r2_radius_factor * p.a() * unit(rng);
        starts.push_back({Stratum::r2, at(r, angle(), sigma)});
    }
    for (std::size_t i = 0; i < n_diag; ++i) {
        const double sigma = p.c1() + (p.c2() - p.c1()) * unit(rng);
        const double r = std::max(0.0, r1_radial_bound(sigma, p) - opts.boundary_offset);
        starts.push_back({Stratum::r1_boundary, at(r, angle(), sigma)});
    }
    for (std::size_t i = 0; i < n_diag; ++i) {
        double u = unit(rng);
        while (u == 0.0) u = unit(rng);
        const double sigma = p.c2() + (p.c3() - p.c2()) * u;
        double r = opts.r2_radius_factor * p.a() * unit(rng);
        while (r == 0.0) r = opts.r2_radius_factor * p.a() * unit(rng);
        starts.push_back({Stratum::above_c2, at(r, angle(), sigma)});
    }
    return starts;
}

namespace detail {

inline void classify_final(BasinOutcome& out, const ModelParams& p, const BasinOptions& opts) {
    const SystemState& f = out.final_state;
    const double dsig = f.sigma - p.c1();
    out.converged = std::sqrt(f.x * f.x + f.y * f.y + dsig * dsig) < opts.tolerance;
    const auto outer3 = outer_cycle_radius(p.c3(), p);
    out.reached_outer_cycle =
        outer3 && std::abs(f.r() - *outer3) < 1e-2 && std::abs(f.sigma - p.c3()) < 1e-2;
}

inline void track_membership(BasinOutcome& out, const SystemState& s, const ModelParams& p,
                             const BasinOptions& opts) {
    const auto m = region_membership(s, p);
    if (!m.inside()) {
        out.max_violation = std::max(out.max_violation, -m.margin);
        if (m.margin < -opts.margin_tolerance) out.stayed_in_region = false;
    }
}

} // namespace detail

/// Integrates one start with the scalar engine.
inline BasinOutcome run_basin_start(const BasinStart& start, const ModelParams& p, const BasinOptions& opts) {
    BasinOutcome out;
    const bool track = inside_region_stratum(start.stratum);
    out.final_state = integrate(start.state, p, {}, opts.integrator, {},
                                [&](const Sample& s) {
                                    if (track) detail::track_membership(out, s.state, p, opts);
                                },
                                [](const DetectionRecord&) {})
                          .final_state;
    detail::classify_final(out, p, opts);
    return out;
}

inline constexpr std::size_t basin_lanes = 8;

/// Integrates up to basin_lanes starts together; same results as calling
/// run_basin_start on each.
inline std::vector<BasinOutcome> run_basin_block(std::span<const BasinStart> block, const ModelParams& p,
                                                 const BasinOptions& opts) {
    const std::size_t n = std::min(block.size(), basin_lanes);
    std::vector<BasinOutcome> out(n);
    StateLanes<basin_lanes> lanes;
    for (std::size_t i = 0; i < basin_lanes; ++i) lanes.set(i, i < n ? block[i].state : SystemState{0, 0, 0, p.c1()});

    const auto& cfg = opts.integrator;
    const std::int64_t n_steps = cfg.steps();
    const auto stride = static_cast<std::int64_t>(cfg.sample_stride);
    const double t0 = n ? block[0].state.t : 0.0;
    for (std::int64_t k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * cfg.dt;
        if (k % stride == 0) {
            for (std::size_t i = 0; i < n; ++i)
                if (inside_region_stratum(block[i].stratum))
                    detail::track_membership(out[i], lanes.lane(i, t), p, opts);
        }
        if (k == n_steps) break;
        step_lanes(lanes, p, cfg.dt, t);
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[i].final_state = lanes.lane(i, t0 + static_cast<double>(n_steps) * cfg.dt);
        detail::classify_final(out[i], p, opts);
    }
    return out;
}

inline BasinReport basin_mc(const ModelParams& p, std::size_t n_samples, std::uint64_t seed,
                            const BasinOptions& opts = {}) {
    opts.integrator.validate();
    BasinReport rep;
    rep.starts = basin_starts(p, n_samples, seed, opts);
    rep.outcomes.resize(rep.starts.size());
    const std::size_t n_blocks = (rep.starts.size() + basin_lanes - 1) / basin_lanes;
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::size_t first = b * basin_lanes;
        const std::size_t count = std::min(basin_lanes, rep.starts.size() - first);
        const auto res = run_basin_block(std::span<const BasinStart>(rep.starts).subspan(first, count), p, opts);
        std::copy(res.begin(), res.end(), rep.outcomes.begin() + static_cast<std::ptrdiff_t>(first));
    });

    for (Stratum s : {Stratum::r1, Stratum::r2, Stratum::r1_boundary, Stratum::above_c2}) {
        StratumReport sr;
        sr.stratum = s;
        for (std::size_t i = 0; i < rep.starts.size(); ++i) {
            if (rep.starts[i].stratum != s) continue;
            const auto& o = rep.outcomes[i];
            ++sr.samples;
            sr.converged += o.converged;
            sr.reached_outer_cycle += o.reached_outer_cycle;
            sr.left_region += !o.stayed_in_region;
            sr.max_violation = std::max(sr.max_violation, o.max_violation);
        }
        if (sr.samples) rep.strata.push_back(sr);
    }
    return rep;
}

} // namespace slowfast
