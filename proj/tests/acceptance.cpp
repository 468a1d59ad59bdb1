// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "slowfast/slowfast.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace slowfast;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double time_limit;
    std::function<Outcome()> run;
};

// Independent forms of the closed-form quantities, written out from the model
// rather than taken from the library.
double outer_radius(double sigma, double a, double b) { return a + std::sqrt(a * a + sigma / b); }
double decay_rate(double sigma, double r0, double a, double b) { return -2.0 * (sigma + 2.0 * a * b * r0 - b * r0 * r0); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome bifurcation_structure() {
    const auto spec = *builtin_scenario("fig2_sweep");
    const auto grid = linear_grid(spec.sweep.sigma_min, spec.sweep.sigma_max, spec.sweep.steps);
    const auto rows = bifurcation_sweep(spec.params, grid, spec.integrator);
    const double a = spec.params.a(), b = spec.params.b();
    double worst_branch = 0.0, worst_decay = 0.0;
    for (const auto& r : rows) {
        if (r.sigma > -0.95) worst_branch = std::max(worst_branch, std::abs(r.high.r - outer_radius(r.sigma, a, b)));
        if (r.sigma < -1.0) worst_decay = std::max({worst_decay, r.low.r, r.high.r});
    }
    std::ostringstream d;
    d << "max |r_high - closed form| = " << worst_branch << " for sigma > -0.95, max r = " << worst_decay
      << " for sigma < -1";
    return {worst_branch < 1e-3 && worst_decay < 1e-6, d.str()};
}

Outcome invariance_and_convergence() {
    const auto spec = *builtin_scenario("basin_mc");
    BasinOptions opts;
    opts.integrator = spec.integrator;
    const auto rep = basin_mc(spec.params, spec.basin.samples, spec.basin.seed, opts);
    bool pass = true;
    std::ostringstream d;
    for (const auto& st : rep.strata) {
        if (!inside_region_stratum(st.stratum)) continue;
        pass = pass && st.left_region == 0 && st.converged == st.samples;
        if (d.tellp() > 0) d << "; ";
        d << to_string(st.stratum) << " " << st.converged << "/" << st.samples << " converged, " << st.left_region
          << " left R";
    }
    return {pass, d.str()};
}

Outcome envelope() {
    const ModelParams p = presets::dynamic_bifurcation();
    const double a = p.a(), b = p.b();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int failures = 0;
    std::size_t checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        double u = unit(rng);
        while (u == 0.0) u = unit(rng);
        const double sigma0 = p.c2() * u;
        const double bound0 = a - std::sqrt(a * a + sigma0 / b);
        const double r0 = (0.1 + 0.8 * unit(rng)) * bound0;
        const double th = 2.0 * std::numbers::pi * unit(rng);
        const SystemState s0{0, std::sqrt(r0) * std::cos(th), std::sqrt(r0) * std::sin(th), sigma0};
        const auto traj = simulate(s0, p, {}, {1e-3, 60.0, 10}).trajectory;
        bool ok = true;
        for (const auto& smp : traj.samples) {
            const auto& s = smp.state;
            const double r = s.x * s.x + s.y * s.y;
            // Stop at the exit from the shrinking-radius region.
            if (a * a + s.sigma / b < 0 || r >= a - std::sqrt(a * a + s.sigma / b)) break;
            ++checked;
            if (r > std::exp(-s.t * decay_rate(s.sigma, r0, a, b)) * r0 + 1e-8 * r0) ok = false;
        }
        failures += !ok;
    }
    std::ostringstream d;
    d << failures << "/200 scenarios violate the envelope, " << checked << " samples checked";
    return {failures == 0 && checked > 0, d.str()};
}

Outcome slowing_down() {
    const auto spec = *builtin_scenario("fig5");
    std::vector<double> times;
    bool reached = true;
    for (double sigma0 : spec.sigma0_variants) {
        SystemState s0 = spec.initial;
        s0.sigma = sigma0;
        const auto rt = recovery_time(simulate(s0, spec.params, {}, spec.integrator).trajectory, 1e-3);
        reached = reached && rt.reached;
        times.push_back(rt.time);
    }
    bool increasing = reached;
    std::ostringstream d;
    d << "recovery times";
    for (std::size_t i = 0; i < times.size(); ++i) {
        d << " " << times[i];
        if (i > 0) increasing = increasing && times[i] > times[i - 1];
    }
    return {increasing, d.str()};
}

SimulationResult probed_run(const ScenarioSpec& spec, bool controlled) {
    SimulationOptions opts;
    opts.probes = spec.probes;
    opts.measurement = spec.measurement;
    if (controlled && spec.control_gain) opts.controller = ControlPolicy(*spec.control_gain);
    IntegratorConfig cfg = spec.integrator;
    cfg.sample_stride = 1;
    return simulate(spec.initial, spec.params, spec.forcing, cfg, opts);
}

Outcome estimator_fidelity() {
    const auto res = probed_run(*builtin_scenario("fig7"), false);
    double worst = 0.0;
    std::size_t used = 0;
    for (const auto& d : res.detections) {
        if (!d.sigma_true || *d.sigma_true >= -0.05) continue;
        ++used;
        worst = d.sigma_n ? std::max(worst, std::abs(*d.sigma_n - *d.sigma_true)) : INFINITY;
    }
    std::ostringstream d;
    d << used << " estimates with sigma < -0.05, max error " << worst;
    return {used > 0 && worst < 0.05, d.str()};
}

Outcome early_detection() {
    const auto res = probed_run(*builtin_scenario("fig7"), false);
    std::optional<double> event;
    for (const auto& d : res.detections)
        if (d.event) {
            event = d.t_f;
            break;
        }
    const auto crossing = sigma_zero_crossing(res.trajectory);
    std::ostringstream d;
    d << "first event " << (event ? fmt("%.4f", *event) : "none") << ", sigma crosses 0 at "
      << (crossing ? fmt("%.4f", *crossing) : "never");
    return {event && crossing && *event < *crossing, d.str()};
}

Outcome control_efficacy() {
    const auto spec = *builtin_scenario("fig8");
    const double m3 = outer_radius(spec.params.c3(), spec.params.a(), spec.params.b());
    const auto ctl = probed_run(spec, true);
    const auto free = probed_run(spec, false);
    const auto on = ctl.controller ? ctl.controller->activation_time() : std::nullopt;
    double sup = 0.0;
    if (on)
        for (const auto& s : ctl.trajectory.samples)
            if (s.state.t > *on) sup = std::max(sup, s.state.r());
    const double free_gap = std::abs(free.trajectory.back().r() - m3);
    std::ostringstream d;
    d << "activation " << (on ? fmt("%.3f", *on) : "none") << ", sup r after = " << sup << " (limit "
      << 0.25 * m3 << "), uncontrolled |r - M3| = " << free_gap;
    return {on && sup < 0.25 * m3 && free_gap < 1e-2, d.str()};
}

Outcome estimator_consistency() {
    const ModelParams p = presets::detection();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> sig(-1.5, 0.5), r0s(0.01, 1.0), ts(0.1, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double sigma0 = sig(rng), r0 = r0s(rng), t = ts(rng);
        const double rt = r0 * std::exp(-decay_rate(sigma0, r0, p.a(), p.b()) * t);
        worst = std::max(worst, std::abs(estimate_sigma(r0, rt, t, p) - sigma0));
    }
    return {worst < 1e-12, "max |error| = " + fmt("%.3g", worst) + " over 100 pairs"};
}

Outcome integrator_order() {
    const auto spec = *builtin_scenario("fig5");
    double lowest = INFINITY;
    for (double sigma0 : spec.sigma0_variants) {
        SystemState s0 = spec.initial;
        s0.sigma = sigma0;
        std::array<SystemState, 3> end;
        const std::array<double, 3> dts{1e-2, 5e-3, 2.5e-3};
        for (std::size_t i = 0; i < 3; ++i)
            end[i] = integrate_to_end(s0, spec.params, {dts[i], spec.integrator.horizon, 1});
        const double e1 = std::hypot(end[0].x - end[1].x, end[0].y - end[1].y);
        const double e2 = std::hypot(end[1].x - end[2].x, end[1].y - end[2].y);
        lowest = std::min(lowest, std::log2(e1 / e2));
    }
    return {lowest >= 3.5, "lowest observed order " + fmt("%.3f", lowest)};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "bifurcation structure", 30.0, bifurcation_structure},
        {2, "invariance of R and convergence to E1", 60.0, invariance_and_convergence},
        {3, "decay envelope", 60.0, envelope},
        {4, "critical slowing down", 10.0, slowing_down},
        {5, "estimator fidelity", 10.0, estimator_fidelity},
        {6, "early detection", 10.0, early_detection},
        {7, "control efficacy", 10.0, control_efficacy},
        {8, "estimator consistency", 1.0, estimator_consistency},
        {9, "integrator order", 10.0, integrator_order},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.time_limit;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("criterion %d %s: %s  %s; %.2f s (limit %.0f s)%s\n", c.id, c.title, pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs, c.time_limit, in_time ? "" : " TOO SLOW");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
