#pragma once

#include "slowfast/control.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/forcing.hpp"
#include "slowfast/model.hpp"
#include "slowfast/probe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace slowfast {

/// Integration produced NaN or Inf. Carries the last finite state.
class NonFiniteState : public Error {
public:
    explicit NonFiniteState(const SystemState& last_good)
        : Error(describe(last_good)), last_good_(last_good) {}

    const SystemState& last_good() const noexcept { return last_good_; }
    double time() const noexcept { return last_good_.t; }

private:
    static std::string describe(const SystemState& s) {
        std::ostringstream os;
        os.precision(17);
        os << "non-finite state after t=" << s.t << " (last good x=" << s.x << ", y=" << s.y
           << ", sigma=" << s.sigma << ")";
        return os.str();
    }

    SystemState last_good_;
};

struct IntegratorConfig {
    double dt = 1e-3;
    double horizon = 100.0;
    std::size_t sample_stride = 1;

    void validate() const {
        if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("integrator.dt", "must be > 0");
        if (!(horizon >= dt) || !std::isfinite(horizon))
            throw ValidationError("integrator.horizon", "must be finite and >= dt");
        if (sample_stride < 1) throw ValidationError("integrator.sample_stride", "must be >= 1");
    }

    std::int64_t steps() const noexcept { return std::llround(horizon / dt); }
};

/// Classical fourth-order Runge-Kutta step of the forced, controlled field.
/// `forcing_at(t)` gives (zeta_x, zeta_y, zeta_sigma) and `control_at(state)`
/// the feedback (u_x, u_y) at each stage.
template <class ForcingFn, class ControlFn>
SystemState step(const SystemState& s, const ModelParams& p, ForcingFn&& forcing_at,
                 ControlFn&& control_at, double dt) {
    auto rhs = [&](const SystemState& st) {
        Forcing z = forcing_at(st.t);
        const ControlInput u = control_at(st);
        z.x += u.x;
        z.y += u.y;
        return vector_field(st, p, z);
    };
    const double h2 = 0.5 * dt;

    const Derivative k1 = rhs(s);
    const Derivative k2 = rhs({s.t + h2, s.x + h2 * k1.x, s.y + h2 * k1.y, s.sigma + h2 * k1.sigma});
    const Derivative k3 = rhs({s.t + h2, s.x + h2 * k2.x, s.y + h2 * k2.y, s.sigma + h2 * k2.sigma});
    const Derivative k4 = rhs({s.t + dt, s.x + dt * k3.x, s.y + dt * k3.y, s.sigma + dt * k3.sigma});

    const double w = dt / 6.0;
    SystemState next{s.t + dt,
                     s.x + w * (k1.x + 2.0 * (k2.x + k3.x) + k4.x),
                     s.y + w * (k1.y + 2.0 * (k2.y + k3.y) + k4.y),
                     s.sigma + w * (k1.sigma + 2.0 * (k2.sigma + k3.sigma) + k4.sigma)};
    if (!next.finite()) throw NonFiniteState(s);
    return next;
}

template <class ForcingFn>
SystemState step(const SystemState& s, const ModelParams& p, ForcingFn&& forcing_at, double dt) {
    return step(s, p, std::forward<ForcingFn>(forcing_at),
                [](const SystemState&) { return ControlInput{}; }, dt);
}

inline SystemState step(const SystemState& s, const ModelParams& p, double dt) {
    return step(s, p, [](double) { return Forcing{}; }, dt);
}

/// N independent states in structure-of-arrays layout.
template <std::size_t N>
struct StateLanes {
    std::array<double, N> x{};
    std::array<double, N> y{};
    std::array<double, N> sigma{};

    SystemState lane(std::size_t i, double t) const { return {t, x[i], y[i], sigma[i]}; }
    void set(std::size_t i, const SystemState& s) {
        x[i] = s.x;
        y[i] = s.y;
        sigma[i] = s.sigma;
    }
};

namespace detail {

// Mirrors vector_field() with zero forcing operation for operation, including
// the "+ 0.0" of the forcing term, so lanes stay bit-identical to step().
template <std::size_t N>
inline void lanes_rhs(const StateLanes<N>& in, StateLanes<N>& d, const ModelParams& p) {
    const double ab2 = 2.0 * p.a() * p.b();
    const double b = p.b();
    const double omega = p.omega();
    const double eps = p.epsilon();
    const double c1 = p.c1(), c2 = p.c2(), c3 = p.c3();
    for (std::size_t i = 0; i < N; ++i) {
        const double r = in.x[i] * in.x[i] + in.y[i] * in.y[i];
        const double f = in.sigma[i] + ab2 * r - b * r * r;
        d.x[i] = -omega * in.y[i] + in.x[i] * f + 0.0;
        d.y[i] = omega * in.x[i] + in.y[i] * f + 0.0;
        d.sigma[i] = -eps * (in.sigma[i] - c1) * (in.sigma[i] - c2) * (in.sigma[i] - c3) + 0.0;
    }
}

template <std::size_t N>
inline void lanes_axpy(const StateLanes<N>& s, double h, const StateLanes<N>& k, StateLanes<N>& out) {
    for (std::size_t i = 0; i < N; ++i) {
        out.x[i] = s.x[i] + h * k.x[i];
        out.y[i] = s.y[i] + h * k.y[i];
        out.sigma[i] = s.sigma[i] + h * k.sigma[i];
    }
}

} // namespace detail

/// Unforced RK4 step of N independent states in lockstep. Bit-identical to
/// applying the scalar step() to each lane; the SoA layout lets the lanes
/// vectorize. Throws NonFiniteState for the first non-finite lane, leaving
/// `s` unchanged.
template <std::size_t N>
void step_lanes(StateLanes<N>& s, const ModelParams& p, double dt, double t = 0.0) {
    const double h2 = 0.5 * dt;
    const double w = dt / 6.0;
    StateLanes<N> k1, k2, k3, k4, tmp;

    detail::lanes_rhs(s, k1, p);
    detail::lanes_axpy(s, h2, k1, tmp);
    detail::lanes_rhs(tmp, k2, p);
    detail::lanes_axpy(s, h2, k2, tmp);
    detail::lanes_rhs(tmp, k3, p);
    detail::lanes_axpy(s, dt, k3, tmp);
    detail::lanes_rhs(tmp, k4, p);

    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) {
        tmp.x[i] = s.x[i] + w * (k1.x[i] + 2.0 * (k2.x[i] + k3.x[i]) + k4.x[i]);
        tmp.y[i] = s.y[i] + w * (k1.y[i] + 2.0 * (k2.y[i] + k3.y[i]) + k4.y[i]);
        tmp.sigma[i] = s.sigma[i] + w * (k1.sigma[i] + 2.0 * (k2.sigma[i] + k3.sigma[i]) + k4.sigma[i]);
        finite &= std::isfinite(tmp.x[i]) & std::isfinite(tmp.y[i]) & std::isfinite(tmp.sigma[i]);
    }
    if (!finite) {
        for (std::size_t i = 0; i < N; ++i)
            if (!tmp.lane(i, t).finite()) throw NonFiniteState(s.lane(i, t));
    }
    s = tmp;
}

/// One recorded point: the state and the inputs applied over the step that
/// starts at it.
struct Sample {
    SystemState state;
    Forcing forcing;
    ControlInput control;
};

struct Trajectory {
    ModelParams params;
    IntegratorConfig config;
    std::uint64_t forcing_digest = 0;
    std::vector<Sample> samples;
    std::vector<std::string> warnings;

    bool empty() const noexcept { return samples.empty(); }
    const SystemState& front() const { return samples.front().state; }
    const SystemState& back() const { return samples.back().state; }
};

struct SimulationOptions {
    std::optional<ControlPolicy> controller;
    std::optional<ProbeSchedule> probes;
    MeasurementNoise measurement;
};

struct RunOutcome {
    SystemState final_state;
    std::optional<ControlPolicy> controller;
    DetectionState detection;
    std::vector<std::string> warnings;
};

namespace detail {

struct GridImpulse {
    std::int64_t index;
    Impulse impulse;
};

struct PreparedProgram {
    ForcingProgram program;
    std::vector<GridImpulse> impulses;
    std::vector<std::string> warnings;
};

inline PreparedProgram prepare(const ForcingProgram& fp, const IntegratorConfig& cfg, double t0) {
    PreparedProgram out{fp, {}, {}};
    const double dt = cfg.dt;
    const auto snap = [&](double t) { return std::llround((t - t0) / dt); };

    for (std::size_t i = 0; i < fp.pulses.size(); ++i) {
        const auto& p = fp.pulses[i];
        const std::string field = "forcing.pulses[" + std::to_string(i) + "]";
        if (!std::isfinite(p.start) || !std::isfinite(p.amplitude))
            throw ValidationError(field, "start and amplitude must be finite");
        if (!(p.width > 0) || !std::isfinite(p.width)) throw ValidationError(field + ".width", "must be > 0");
    }

    for (std::size_t i = 0; i < fp.impulses.size(); ++i) {
        const auto& imp = fp.impulses[i];
        const std::string field = "forcing.impulses[" + std::to_string(i) + "].time";
        if (!std::isfinite(imp.dx) || !std::isfinite(imp.dy) || !std::isfinite(imp.dsigma))
            throw ValidationError("forcing.impulses[" + std::to_string(i) + "]", "jumps must be finite");
        const double rel = imp.time - t0;
        if (!(rel > 0 && rel < cfg.horizon)) throw ValidationError(field, "must lie strictly inside the horizon");
        const std::int64_t k = snap(imp.time);
        if (std::abs(static_cast<double>(k) * dt - rel) > 0.5 * dt) {
            out.warnings.push_back(field + " snapped by more than dt/2");
        }
        for (const auto& other : out.impulses) {
            if (other.index == k) throw ScheduleConflict(field, "shares a grid point with another impulse");
        }
        for (const auto& p : fp.pulses) {
            if (snap(p.start) == k || snap(p.end()) == k)
                throw ScheduleConflict(field, "coincides with a pulse edge on the integrator grid");
        }
        out.impulses.push_back({k, imp});
    }
    std::sort(out.impulses.begin(), out.impulses.end(),
              [](const GridImpulse& a, const GridImpulse& b) { return a.index < b.index; });

    if (out.program.noise && !(out.program.noise->hold > 0)) out.program.noise->hold = dt;
    return out;
}

inline constexpr std::uint64_t measurement_stream_x = 101;
inline constexpr std::uint64_t measurement_stream_y = 102;

} // namespace detail

/// Fixed-step integration engine. Calls `on_sample(const Sample&)` for every
/// sample_stride-th grid point and `on_detection(const DetectionRecord&)` for
/// each completed probe.
///
/// Per grid index k, in order: impulses due at k are applied as exact jumps,
/// probe measurements due at k are taken (an event latches the detector, halts
/// probing and activates the controller), the inputs for the step [t_k, t_k+1]
/// are fixed, the sample is emitted, and the RK4 step is taken. Forcing is held
/// at its value at the step midpoint, so pulse edges on the grid are exact.
template <class OnSample, class OnDetection>
RunOutcome integrate(const SystemState& initial, const ModelParams& p, const ForcingProgram& program,
                     const IntegratorConfig& cfg, const SimulationOptions& opts, OnSample&& on_sample,
                     OnDetection&& on_detection) {
    cfg.validate();
    if (!initial.finite()) throw ValidationError("initial", "state must be finite");
    const double t0 = initial.t;
    const double dt = cfg.dt;
    const auto prepared = detail::prepare(program, cfg, t0);

    std::optional<ProbeGrid> grid;
    if (opts.probes) {
        opts.probes->validate();
        ProbeSchedule rel = *opts.probes;
        rel.t1 -= t0;
        grid.emplace(rel, dt);
    }
    if (opts.measurement.stddev < 0 || !std::isfinite(opts.measurement.stddev))
        throw ValidationError("probes.measurement_noise", "must be finite and >= 0");

    RunOutcome out{initial, opts.controller, initial_detection_state(p), prepared.warnings};
    ProbeSamples pending;
    bool has_pending = false;
    int probe = 1;

    const auto measure = [&](const SystemState& s, std::int64_t k) {
        if (opts.measurement.stddev == 0.0) return s.r();
        const double mx = s.x + opts.measurement.stddev *
                                    counter_normal(opts.measurement.seed, detail::measurement_stream_x, k);
        const double my = s.y + opts.measurement.stddev *
                                    counter_normal(opts.measurement.seed, detail::measurement_stream_y, k);
        return mx * mx + my * my;
    };

    SystemState s = initial;
    const std::int64_t n_steps = cfg.steps();
    std::size_t next_impulse = 0;
    const auto stride = static_cast<std::int64_t>(cfg.sample_stride);

    for (std::int64_t k = 0;; ++k) {
        s.t = t0 + static_cast<double>(k) * dt;

        while (next_impulse < prepared.impulses.size() && prepared.impulses[next_impulse].index == k) {
            const auto& imp = prepared.impulses[next_impulse].impulse;
            const SystemState before = s;
            s.x += imp.dx;
            s.y += imp.dy;
            s.sigma += imp.dsigma;
            if (!s.finite()) throw NonFiniteState(before);
            ++next_impulse;
        }

        if (grid && !out.detection.latched) {
            if (k == grid->first_sample(probe)) {
                pending = ProbeSamples{probe, s.t, 0.0, measure(s, k), 0.0, s.sigma};
                has_pending = true;
            }
            if (k == grid->final_sample(probe) && has_pending) {
                pending.t_f = s.t;
                pending.r_f = measure(s, k);
                auto [record, next_state] = detector_step(pending, *opts.probes, p, out.detection);
                out.detection = next_state;
                if (record.event && out.controller) out.controller = out.controller->on_event(s.t);
                on_detection(std::as_const(record));
                has_pending = false;
                ++probe;
            }
        }

        Forcing z = forcing_at(s.t + 0.5 * dt, prepared.program);
        if (grid && !out.detection.latched && grid->pulse_covers_step(k)) {
            z.x += opts.probes->amplitude;
            z.y += opts.probes->amplitude;
        }
        // F(t) is zero up to and including the activation time; the recorded
        // input follows that, while the step starting there already carries it.
        const bool active = out.controller && out.controller->latched() && s.t > *out.controller->activation_time();
        const ControlInput u = active ? control_input(s, *out.controller) : ControlInput{};

        if (k % stride == 0) on_sample(Sample{s, z, u});
        if (k == n_steps) break;

        const auto held = [z](double) { return z; };
        if (out.controller && out.controller->latched()) {
            const ControlPolicy policy = *out.controller;
            s = step(s, p, held, [policy](const SystemState& st) { return control_input(st, policy); }, dt);
        } else {
            s = step(s, p, held, dt);
        }
    }
    out.final_state = s;
    return out;
}

struct SimulationResult {
    Trajectory trajectory;
    std::vector<DetectionRecord> detections;
    std::optional<ControlPolicy> controller;
};

/// Runs `integrate` collecting into `out`. On NonFiniteState the samples and
/// detections recorded so far remain in `out`.
inline void simulate_into(SimulationResult& out, const SystemState& initial, const ModelParams& p,
                          const ForcingProgram& program, const IntegratorConfig& cfg,
                          const SimulationOptions& opts = {}) {
    out.trajectory.config = cfg;
    out.trajectory.forcing_digest = digest(program);
    out.trajectory.samples.clear();
    out.detections.clear();
    if (cfg.sample_stride >= 1 && cfg.dt > 0)
        out.trajectory.samples.reserve(static_cast<std::size_t>(cfg.steps() / static_cast<std::int64_t>(cfg.sample_stride)) + 1);
    auto outcome = integrate(
        initial, p, program, cfg, opts, [&](const Sample& s) { out.trajectory.samples.push_back(s); },
        [&](const DetectionRecord& r) { out.detections.push_back(r); });
    out.trajectory.warnings = std::move(outcome.warnings);
    out.controller = outcome.controller;
}

inline SimulationResult simulate(const SystemState& initial, const ModelParams& p, const ForcingProgram& program,
                                 const IntegratorConfig& cfg, const SimulationOptions& opts = {}) {
    SimulationResult out{Trajectory{p, cfg, 0, {}, {}}, {}, std::nullopt};
    simulate_into(out, initial, p, program, cfg, opts);
    return out;
}

/// Final state only, no recording.
inline SystemState integrate_to_end(const SystemState& initial, const ModelParams& p, const IntegratorConfig& cfg,
                                    const ForcingProgram& program = {}) {
    return integrate(initial, p, program, cfg, {}, [](const Sample&) {}, [](const DetectionRecord&) {})
        .final_state;
}

} // namespace slowfast
