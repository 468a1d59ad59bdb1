#pragma once

// Active probing: periodic square pulses on x and y, two measurements per
// pulse, and an excitability estimate from the observed decay.
//
//   t_n   = t1 + (n - 1) P          pulse on [t_n, t_n + Delta]
//   t_n^s = t_n + Delta             first measurement, r_n^s
//   t_n^f = t_n^s + P/2             second measurement, r_n^f
//
//   sigma_n = (1/P) ln(r_n^f / r_n^s) - 2ab r_n^s + b (r_n^s)^2

#include "slowfast/errors.hpp"
#include "slowfast/estimator.hpp"
#include "slowfast/model.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

namespace slowfast {

struct ProbeSchedule {
    double t1 = 15.0;
    double period = 15.0;
    double amplitude = 0.5;
    double width = 0.2;
    double threshold = -0.1;

    /// First probe one period after start.
    static ProbeSchedule standard(double period, double amplitude, double width, double threshold) {
        return {period, period, amplitude, width, threshold};
    }

    void validate() const {
        if (!std::isfinite(t1) || t1 < 0) throw ValidationError("probes.t1", "must be finite and >= 0");
        if (!(period > 0) || !std::isfinite(period)) throw ValidationError("probes.period", "must be > 0");
        if (!(amplitude > 0) || !std::isfinite(amplitude))
            throw ValidationError("probes.amplitude", "must be > 0");
        if (!(width > 0) || !(width < period / 2))
            throw ValidationError("probes.width", "requires 0 < width < period/2");
        if (!(threshold < 0)) throw ValidationError("probes.threshold", "must be < 0");
    }

    double pulse_start(int n) const noexcept { return t1 + (n - 1) * period; }
    double first_sample(int n) const noexcept { return pulse_start(n) + width; }
    double final_sample(int n) const noexcept { return first_sample(n) + period / 2; }
};

/// Probe times snapped to an integrator grid of step dt. Each offset is snapped
/// separately so that t_s - t_n and t_f - t_s are the same number of steps for
/// every probe.
class ProbeGrid {
public:
    ProbeGrid(const ProbeSchedule& s, double dt)
        : start1_(std::llround(s.t1 / dt)), period_(std::llround(s.period / dt)),
          width_(std::llround(s.width / dt)), half_(std::llround(s.period / 2 / dt)) {
        if (width_ < 1) throw ValidationError("probes.width", "shorter than one integrator step");
        if (width_ + half_ >= period_)
            throw ValidationError("probes.width", "final sample does not precede the next pulse on the grid");
    }

    std::int64_t pulse_start(int n) const noexcept { return start1_ + (n - 1) * period_; }
    std::int64_t first_sample(int n) const noexcept { return pulse_start(n) + width_; }
    std::int64_t final_sample(int n) const noexcept { return first_sample(n) + half_; }

    /// Probe whose pulse covers the step starting at grid index k, if any.
    bool pulse_covers_step(std::int64_t k) const noexcept {
        if (k < start1_) return false;
        return (k - start1_) % period_ < width_;
    }

private:
    std::int64_t start1_;
    std::int64_t period_;
    std::int64_t width_;
    std::int64_t half_;
};

/// (K, K) on x and y inside a pulse, zero otherwise or once probing is halted.
inline Forcing probe_forcing(double t, const ProbeSchedule& sched, bool halted) noexcept {
    if (halted || t < sched.t1) return {};
    const double n0 = std::floor((t - sched.t1) / sched.period);
    const double since = t - (sched.t1 + n0 * sched.period);
    if (since <= sched.width) return {sched.amplitude, sched.amplitude, 0.0};
    return {};
}

/// The decay window is P/2, which is where the 1/P prefactor comes from; the
/// reference radius is therefore the post-pulse sample r_s.
inline double estimate_from_probe(double r_s, double r_f, const ProbeSchedule& sched,
                                  const ModelParams& p) {
    if (!(r_s > radius_floor) || !(r_f > radius_floor))
        throw DegenerateRadius("probe response below the radius floor");
    return std::log(r_f / r_s) / sched.period - 2.0 * p.a() * p.b() * r_s + p.b() * r_s * r_s;
}

/// Measurements gathered for one probe.
struct ProbeSamples {
    int n = 1;
    double t_s = 0.0;
    double t_f = 0.0;
    double r_s = 0.0;
    double r_f = 0.0;
    std::optional<double> sigma_true;
};

struct DetectionRecord {
    int n = 1;
    double t_s = 0.0;
    double t_f = 0.0;
    double r_s = 0.0;
    double r_f = 0.0;
    std::optional<double> sigma_n;   // empty when the probe was skipped
    std::optional<double> sigma_true;
    bool event = false;

    bool skipped() const noexcept { return !sigma_n.has_value(); }
};

struct DetectionState {
    int next_probe = 1;
    double last_estimate = 0.0;
    bool latched = false;
    std::optional<double> first_event_time;
};

/// Detector state before any probe: the last estimate starts at -a^2 b.
inline DetectionState initial_detection_state(const ModelParams& p) noexcept {
    DetectionState s;
    s.last_estimate = p.fold();
    return s;
}

/// Processes one completed probe. A degenerate probe yields a skipped record
/// with no event. Once latched the detector stays latched.
inline std::pair<DetectionRecord, DetectionState>
detector_step(const ProbeSamples& in, const ProbeSchedule& sched, const ModelParams& p,
              DetectionState state) {
    DetectionRecord rec;
    rec.n = in.n;
    rec.t_s = in.t_s;
    rec.t_f = in.t_f;
    rec.r_s = in.r_s;
    rec.r_f = in.r_f;
    rec.sigma_true = in.sigma_true;

    try {
        const double sigma_n = estimate_from_probe(in.r_s, in.r_f, sched, p);
        rec.sigma_n = sigma_n;
        rec.event = sigma_n > sched.threshold;
        state.last_estimate = sigma_n;
    } catch (const DegenerateRadius&) {
        rec.event = false;
    }

    if (rec.event && !state.latched) {
        state.latched = true;
        state.first_event_time = in.t_f;
    }
    state.next_probe = in.n + 1;
    return {rec, state};
}

/// Optional additive noise on the measured x and y, keyed by sample time index.
struct MeasurementNoise {
    double stddev = 0.0;
    std::uint64_t seed = 0;
};

} // namespace slowfast
