#pragma once

// Scenario definitions, the built-in figure reproductions, and the runner that
// writes plot-ready files.

#include "slowfast/analysis.hpp"
#include "slowfast/basin.hpp"
#include "slowfast/control.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/forcing.hpp"
#include "slowfast/integrator.hpp"
#include "slowfast/io.hpp"
#include "slowfast/model.hpp"
#include "slowfast/probe.hpp"
#include "slowfast/sweep.hpp"

#include "json.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace slowfast {

enum class ScenarioKind { trajectory, sweep, basin };

inline const char* to_string(ScenarioKind k) noexcept {
    switch (k) {
    case ScenarioKind::trajectory: return "trajectory";
    case ScenarioKind::sweep: return "sweep";
    case ScenarioKind::basin: return "basin";
    }
    return "?";
}

struct OutputPaths {
    std::optional<std::string> trajectory_csv;
    std::optional<std::string> detection_jsonl;
    std::optional<std::string> summary_json;
    std::optional<std::string> sweep_csv;
};

struct SweepSpec {
    double sigma_min = -1.2;
    double sigma_max = 0.5;
    int steps = 69;
};

struct BasinSpec {
    std::size_t samples = 2000;
    std::uint64_t seed = 7;
};

struct ScenarioSpec {
    ScenarioSpec(std::string name_, ScenarioKind kind_, ModelParams params_, SystemState initial_ = {},
                 IntegratorConfig integrator_ = {})
        : name(std::move(name_)), kind(kind_), params(params_), initial(initial_), integrator(integrator_) {}

    std::string name;
    ScenarioKind kind = ScenarioKind::trajectory;
    ModelParams params;
    SystemState initial;
    ForcingProgram forcing;
    IntegratorConfig integrator;
    std::optional<ProbeSchedule> probes;
    MeasurementNoise measurement;
    std::optional<double> control_gain;
    /// Also run without the controller and report the uncontrolled response.
    bool compare_uncontrolled = false;
    /// Run once per listed sigma(0) instead of once from `initial`.
    std::vector<double> sigma0_variants;
    double recovery_fraction = 1e-3;
    SweepSpec sweep;
    BasinSpec basin;
    OutputPaths outputs;

    void validate() const;
};

inline void ScenarioSpec::validate() const {
    if (name.empty()) throw ValidationError("name", "must not be empty");
    integrator.validate();
    if (!initial.finite()) throw ValidationError("initial", "state must be finite");
    if (probes) {
        probes->validate();
        ProbeGrid check(*probes, integrator.dt);
        (void)check;
    }
    if (measurement.stddev < 0 || !std::isfinite(measurement.stddev))
        throw ValidationError("probes.measurement_noise", "must be finite and >= 0");
    if (control_gain) {
        ControlPolicy check(*control_gain);
        (void)check;
        if (!probes) throw ValidationError("control", "event-based control requires a probe schedule");
    }
    if (compare_uncontrolled && !control_gain)
        throw ValidationError("compare_uncontrolled", "requires control");
    for (std::size_t i = 0; i < sigma0_variants.size(); ++i)
        if (!std::isfinite(sigma0_variants[i]))
            throw ValidationError("sigma0_variants[" + std::to_string(i) + "]", "must be finite");
    if (!(recovery_fraction > 0 && recovery_fraction < 1))
        throw ValidationError("recovery_fraction", "must be in (0, 1)");
    if (kind == ScenarioKind::sweep) {
        if (!(sweep.sigma_min < sweep.sigma_max)) throw ValidationError("sweep.sigma_max", "must exceed sigma_min");
        if (sweep.steps < 2) throw ValidationError("sweep.steps", "must be >= 2");
    }
    if (kind == ScenarioKind::basin) {
        if (basin.samples < 2) throw ValidationError("basin.samples", "must be >= 2");
        require_attraction_regime(params);
    }

    std::set<std::string> seen;
    const auto unique = [&](const std::optional<std::string>& path, const char* field) {
        if (!path) return;
        if (path->empty()) throw ValidationError(std::string("outputs.") + field, "must not be empty");
        if (!seen.insert(*path).second)
            throw ValidationError(std::string("outputs.") + field, "duplicates another output path");
    };
    unique(outputs.trajectory_csv, "trajectory_csv");
    unique(outputs.detection_jsonl, "detection_jsonl");
    unique(outputs.summary_json, "summary_json");
    unique(outputs.sweep_csv, "sweep_csv");
}

// ---------------------------------------------------------------------------
// Parameter sets of the reference figures

namespace presets {

inline ModelParams bifurcation() { return {2.0, 1.0, 1.0, -0.9, -0.7, 0.5, 0.0}; }
inline ModelParams dynamic_bifurcation() { return {2.0, 1.0, 1.0, -0.9, -0.7, 0.5, 0.1}; }
inline ModelParams slowing_down() { return {5.0, 1.0, 1.0, -0.9, -0.7, 0.5, 0.01}; }
inline ModelParams detection() { return {4.0, 1.0, 1.0, -0.9, -0.7, 0.2, 0.1}; }

/// Offset above c2 at which the sigma impulse places the excitability.
inline constexpr double sigma_kick_offset = 0.02;

} // namespace presets

inline std::vector<std::string> builtin_names() {
    return {"fig2_sweep", "fig4", "fig5", "fig7", "fig8", "basin_mc"};
}

inline std::optional<ScenarioSpec> builtin_scenario(const std::string& name) {
    const auto outputs = [&](bool detections) {
        OutputPaths o;
        o.trajectory_csv = name + "_trajectory.csv";
        if (detections) o.detection_jsonl = name + "_detections.jsonl";
        o.summary_json = name + "_summary.json";
        return o;
    };

    if (name == "fig2_sweep") {
        ScenarioSpec s(name, ScenarioKind::sweep, presets::bifurcation(), {}, {1e-3, 1000.0, 1});
        s.outputs.sweep_csv = "fig2_sweep.csv";
        s.outputs.summary_json = "fig2_sweep_summary.json";
        return s;
    }
    if (name == "fig4") {
        // Rest at E1, then at t = 40 kick (x, y) to (0.1, 0.1) and sigma to just above c2.
        const auto p = presets::dynamic_bifurcation();
        ScenarioSpec s(name, ScenarioKind::trajectory, p, {0.0, 0.0, 0.0, p.c1()}, {1e-3, 400.0, 10});
        s.forcing.impulses.push_back({40.0, 0.1, 0.1, p.c2() + presets::sigma_kick_offset - p.c1()});
        s.outputs = outputs(false);
        return s;
    }
    if (name == "fig5") {
        const auto p = presets::slowing_down();
        ScenarioSpec s(name, ScenarioKind::trajectory, p, {0.0, 0.1, 0.1, -0.6}, {1e-3, 100.0, 1});
        s.sigma0_variants = {-0.6, -0.4, -0.2};
        s.outputs = outputs(false);
        return s;
    }
    if (name == "fig7" || name == "fig8") {
        const auto p = presets::detection();
        ScenarioSpec s(name, ScenarioKind::trajectory, p, {0.0, 0.0, 0.0, -0.65}, {1e-3, 400.0, 10});
        s.probes = ProbeSchedule::standard(15.0, 0.5, 0.2, -0.1);
        if (name == "fig8") {
            s.control_gain = 1.4;
            s.compare_uncontrolled = true;
        }
        s.outputs = outputs(true);
        return s;
    }
    if (name == "basin_mc") {
        const auto p = presets::dynamic_bifurcation();
        ScenarioSpec s(name, ScenarioKind::basin, p, {0.0, 0.0, 0.0, p.c1()}, {1e-2, 500.0, 10});
        s.outputs.summary_json = "basin_mc_summary.json";
        return s;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON form of ScenarioSpec. Field names mirror the struct.

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ValidationError(path.empty() ? "<root>" : path, "must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError(path.empty() ? key : path + "." + key, "unknown field");
    }
}

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline double number(const json& j, const std::string& path, const char* key, std::optional<double> fallback = {}) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ValidationError(join(path, key), "required");
    }
    const auto& v = j.at(key);
    if (!v.is_number()) throw ValidationError(join(path, key), "must be a number");
    return v.get<double>();
}

inline std::uint64_t unsigned_int(const json& j, const std::string& path, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ValidationError(join(path, key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string string(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw ValidationError(join(path, key), "must be a string");
    return j.at(key).get<std::string>();
}

inline Channel channel(const json& j, const std::string& path) {
    if (!j.is_string()) throw ValidationError(path, "must be one of x, y, sigma");
    const auto c = parse_channel(j.get<std::string>());
    if (!c) throw ValidationError(path, "must be one of x, y, sigma");
    return *c;
}

} // namespace detail

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    using detail::number;
    detail::check_keys(j, "",
                       {"name", "kind", "params", "initial", "forcing", "integrator", "probes", "control",
                        "compare_uncontrolled", "sigma0_variants", "recovery_fraction", "sweep", "basin", "outputs"});

    if (!j.contains("params")) throw ValidationError("params", "required");
    const auto& jp = j.at("params");
    detail::check_keys(jp, "params", {"omega", "a", "b", "c1", "c2", "c3", "epsilon"});
    ModelParams params(number(jp, "params", "omega"), number(jp, "params", "a"), number(jp, "params", "b"),
                       number(jp, "params", "c1"), number(jp, "params", "c2"), number(jp, "params", "c3"),
                       number(jp, "params", "epsilon"));

    ScenarioSpec s(detail::string(j, "", "name"), ScenarioKind::trajectory, params);

    if (j.contains("kind")) {
        const auto k = detail::string(j, "", "kind");
        if (k == "trajectory") s.kind = ScenarioKind::trajectory;
        else if (k == "sweep") s.kind = ScenarioKind::sweep;
        else if (k == "basin") s.kind = ScenarioKind::basin;
        else throw ValidationError("kind", "must be trajectory, sweep or basin");
    }

    if (j.contains("initial")) {
        const auto& ji = j.at("initial");
        detail::check_keys(ji, "initial", {"t", "x", "y", "sigma"});
        s.initial = {number(ji, "initial", "t", 0.0), number(ji, "initial", "x", 0.0),
                     number(ji, "initial", "y", 0.0), number(ji, "initial", "sigma")};
    } else {
        s.initial = {0.0, 0.0, 0.0, params.c1()};
    }

    if (j.contains("forcing")) {
        const auto& jf = j.at("forcing");
        detail::check_keys(jf, "forcing", {"pulses", "impulses", "noise"});
        if (jf.contains("pulses")) {
            const auto& arr = jf.at("pulses");
            if (!arr.is_array()) throw ValidationError("forcing.pulses", "must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string path = "forcing.pulses[" + std::to_string(i) + "]";
                const auto& e = arr[i];
                detail::check_keys(e, path, {"channel", "start", "width", "amplitude"});
                if (!e.contains("channel")) throw ValidationError(path + ".channel", "required");
                s.forcing.pulses.push_back({detail::channel(e.at("channel"), path + ".channel"),
                                            number(e, path, "start"), number(e, path, "width"),
                                            number(e, path, "amplitude")});
            }
        }
        if (jf.contains("impulses")) {
            const auto& arr = jf.at("impulses");
            if (!arr.is_array()) throw ValidationError("forcing.impulses", "must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string path = "forcing.impulses[" + std::to_string(i) + "]";
                const auto& e = arr[i];
                detail::check_keys(e, path, {"time", "dx", "dy", "dsigma"});
                s.forcing.impulses.push_back({number(e, path, "time"), number(e, path, "dx", 0.0),
                                              number(e, path, "dy", 0.0), number(e, path, "dsigma", 0.0)});
            }
        }
        if (jf.contains("noise") && !jf.at("noise").is_null()) {
            const auto& e = jf.at("noise");
            detail::check_keys(e, "forcing.noise", {"channels", "stddev", "seed"});
            NoiseSpec n;
            n.channels = {false, false, false};
            if (e.contains("channels")) {
                const auto& chs = e.at("channels");
                if (!chs.is_array()) throw ValidationError("forcing.noise.channels", "must be an array");
                for (std::size_t i = 0; i < chs.size(); ++i)
                    n.channels[static_cast<std::size_t>(
                        detail::channel(chs[i], "forcing.noise.channels[" + std::to_string(i) + "]"))] = true;
            } else {
                n.channels = {true, true, false};
            }
            n.stddev = number(e, "forcing.noise", "stddev");
            if (!(n.stddev >= 0)) throw ValidationError("forcing.noise.stddev", "must be >= 0");
            n.seed = detail::unsigned_int(e, "forcing.noise", "seed", 0);
            s.forcing.noise = n;
        }
    }

    if (j.contains("integrator")) {
        const auto& e = j.at("integrator");
        detail::check_keys(e, "integrator", {"dt", "horizon", "sample_stride"});
        s.integrator.dt = number(e, "integrator", "dt", 1e-3);
        s.integrator.horizon = number(e, "integrator", "horizon", s.integrator.horizon);
        s.integrator.sample_stride = detail::unsigned_int(e, "integrator", "sample_stride", 1);
    }

    if (j.contains("probes") && !j.at("probes").is_null()) {
        const auto& e = j.at("probes");
        detail::check_keys(e, "probes",
                           {"t1", "period", "amplitude", "width", "threshold", "measurement_noise", "measurement_seed"});
        ProbeSchedule ps;
        ps.period = number(e, "probes", "period");
        ps.t1 = number(e, "probes", "t1", ps.period);
        ps.amplitude = number(e, "probes", "amplitude");
        ps.width = number(e, "probes", "width");
        ps.threshold = number(e, "probes", "threshold");
        s.probes = ps;
        s.measurement.stddev = number(e, "probes", "measurement_noise", 0.0);
        s.measurement.seed = detail::unsigned_int(e, "probes", "measurement_seed", 0);
    }

    if (j.contains("control") && !j.at("control").is_null()) {
        const auto& e = j.at("control");
        detail::check_keys(e, "control", {"gain"});
        s.control_gain = number(e, "control", "gain");
    }
    if (j.contains("compare_uncontrolled")) {
        if (!j.at("compare_uncontrolled").is_boolean())
            throw ValidationError("compare_uncontrolled", "must be a boolean");
        s.compare_uncontrolled = j.at("compare_uncontrolled").get<bool>();
    }
    if (j.contains("sigma0_variants")) {
        const auto& arr = j.at("sigma0_variants");
        if (!arr.is_array()) throw ValidationError("sigma0_variants", "must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number())
                throw ValidationError("sigma0_variants[" + std::to_string(i) + "]", "must be a number");
            s.sigma0_variants.push_back(arr[i].get<double>());
        }
    }
    s.recovery_fraction = number(j, "", "recovery_fraction", 1e-3);

    if (j.contains("sweep")) {
        const auto& e = j.at("sweep");
        detail::check_keys(e, "sweep", {"sigma_min", "sigma_max", "steps"});
        s.sweep.sigma_min = number(e, "sweep", "sigma_min", s.sweep.sigma_min);
        s.sweep.sigma_max = number(e, "sweep", "sigma_max", s.sweep.sigma_max);
        s.sweep.steps = static_cast<int>(detail::unsigned_int(e, "sweep", "steps", 69));
    }
    if (j.contains("basin")) {
        const auto& e = j.at("basin");
        detail::check_keys(e, "basin", {"samples", "seed"});
        s.basin.samples = detail::unsigned_int(e, "basin", "samples", s.basin.samples);
        s.basin.seed = detail::unsigned_int(e, "basin", "seed", s.basin.seed);
    }

    if (j.contains("outputs")) {
        const auto& e = j.at("outputs");
        detail::check_keys(e, "outputs", {"trajectory_csv", "detection_jsonl", "summary_json", "sweep_csv"});
        const auto opt = [&](const char* key) -> std::optional<std::string> {
            if (!e.contains(key) || e.at(key).is_null()) return std::nullopt;
            if (!e.at(key).is_string()) throw ValidationError(std::string("outputs.") + key, "must be a string");
            return e.at(key).get<std::string>();
        };
        s.outputs = {opt("trajectory_csv"), opt("detection_jsonl"), opt("summary_json"), opt("sweep_csv")};
    }

    s.validate();
    return s;
}

inline nlohmann::json to_json(const ScenarioSpec& s) {
    using nlohmann::json;
    json j;
    j["name"] = s.name;
    j["kind"] = to_string(s.kind);
    const auto& p = s.params;
    j["params"] = {{"omega", p.omega()}, {"a", p.a()},   {"b", p.b()},         {"c1", p.c1()},
                   {"c2", p.c2()},       {"c3", p.c3()}, {"epsilon", p.epsilon()}};
    j["initial"] = {{"t", s.initial.t}, {"x", s.initial.x}, {"y", s.initial.y}, {"sigma", s.initial.sigma}};

    json forcing = json::object();
    json pulses = json::array();
    for (const auto& pl : s.forcing.pulses)
        pulses.push_back({{"channel", to_string(pl.channel)}, {"start", pl.start}, {"width", pl.width},
                          {"amplitude", pl.amplitude}});
    json impulses = json::array();
    for (const auto& im : s.forcing.impulses)
        impulses.push_back({{"time", im.time}, {"dx", im.dx}, {"dy", im.dy}, {"dsigma", im.dsigma}});
    forcing["pulses"] = pulses;
    forcing["impulses"] = impulses;
    if (s.forcing.noise) {
        json chs = json::array();
        for (Channel c : {Channel::x, Channel::y, Channel::sigma})
            if (s.forcing.noise->channels[static_cast<std::size_t>(c)]) chs.push_back(to_string(c));
        forcing["noise"] = {{"channels", chs}, {"stddev", s.forcing.noise->stddev}, {"seed", s.forcing.noise->seed}};
    }
    j["forcing"] = forcing;
    j["integrator"] = {{"dt", s.integrator.dt},
                       {"horizon", s.integrator.horizon},
                       {"sample_stride", s.integrator.sample_stride}};
    if (s.probes) {
        j["probes"] = {{"t1", s.probes->t1},
                       {"period", s.probes->period},
                       {"amplitude", s.probes->amplitude},
                       {"width", s.probes->width},
                       {"threshold", s.probes->threshold},
                       {"measurement_noise", s.measurement.stddev},
                       {"measurement_seed", s.measurement.seed}};
    }
    if (s.control_gain) j["control"] = {{"gain", *s.control_gain}};
    j["compare_uncontrolled"] = s.compare_uncontrolled;
    j["sigma0_variants"] = s.sigma0_variants;
    j["recovery_fraction"] = s.recovery_fraction;
    if (s.kind == ScenarioKind::sweep)
        j["sweep"] = {{"sigma_min", s.sweep.sigma_min}, {"sigma_max", s.sweep.sigma_max}, {"steps", s.sweep.steps}};
    if (s.kind == ScenarioKind::basin) j["basin"] = {{"samples", s.basin.samples}, {"seed", s.basin.seed}};

    json out = json::object();
    const auto put = [&](const char* key, const std::optional<std::string>& v) {
        if (v) out[key] = *v;
    };
    put("trajectory_csv", s.outputs.trajectory_csv);
    put("detection_jsonl", s.outputs.detection_jsonl);
    put("summary_json", s.outputs.summary_json);
    put("sweep_csv", s.outputs.sweep_csv);
    j["outputs"] = out;
    return j;
}

inline ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("file", "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("file", std::string("not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

/// Built-in name or path to a scenario file.
inline ScenarioSpec resolve_scenario(const std::string& name_or_path) {
    if (auto s = builtin_scenario(name_or_path)) return *s;
    if (std::filesystem::exists(name_or_path)) return load_scenario_file(name_or_path);
    throw ValidationError("scenario", "'" + name_or_path + "' is neither a built-in scenario nor a readable file");
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
    double sigma0 = 0.0;
    SystemState terminal;
    std::optional<RecoveryTime> recovery;
    std::optional<EnvelopeReport> envelope;
    std::optional<double> sigma_zero_crossing;
    std::optional<std::array<std::size_t, 3>> region_counts;
};

struct RunSummary {
    std::string scenario;
    ScenarioKind kind = ScenarioKind::trajectory;
    std::optional<SystemState> terminal;
    std::size_t probes = 0;
    std::size_t events = 0;
    std::optional<double> first_event_time;
    std::optional<double> sigma_zero_crossing;
    std::optional<double> activation_time;
    std::optional<double> sup_r_after_activation;
    std::optional<double> uncontrolled_sup_r;
    std::optional<double> uncontrolled_terminal_r;
    std::vector<RunResult> runs;
    std::vector<DetectionRecord> detections;
    std::vector<SweepRow> sweep;
    std::optional<BasinReport> basin;
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
    std::vector<std::string> files;
    /// Not written to the summary file, which must be reproducible byte for byte.
    double wall_seconds = 0.0;
};

/// First time sigma reaches 0 from below, linearly interpolated between samples.
inline std::optional<double> sigma_zero_crossing(const Trajectory& traj) {
    const auto& v = traj.samples;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const auto& a = v[i - 1].state;
        const auto& b = v[i].state;
        if (a.sigma < 0.0 && b.sigma >= 0.0) return a.t + (b.t - a.t) * (0.0 - a.sigma) / (b.sigma - a.sigma);
    }
    return std::nullopt;
}

inline std::optional<double> sup_r_after(const Trajectory& traj, double t) {
    std::optional<double> sup;
    for (const auto& s : traj.samples)
        if (s.state.t > t) sup = std::max(sup.value_or(0.0), s.state.r());
    return sup;
}

inline double max_r(const Trajectory& traj) {
    double m = 0.0;
    for (const auto& s : traj.samples) m = std::max(m, s.state.r());
    return m;
}

/// The envelope is only checked on unforced runs, which is where the bound applies.
inline RunResult analyse_run(const Trajectory& traj, double recovery_fraction, bool unforced) {
    const ModelParams& p = traj.params;
    RunResult r;
    r.sigma0 = traj.front().sigma;
    r.terminal = traj.back();
    if (traj.front().r() > 0) r.recovery = recovery_time(traj, recovery_fraction);
    if (unforced) {
        try {
            r.envelope = check_envelope(traj, p);
        } catch (const PreconditionError&) {
        }
    }
    r.sigma_zero_crossing = sigma_zero_crossing(traj);
    if (in_attraction_regime(p)) {
        std::array<std::size_t, 3> counts{};
        for (const auto& s : traj.samples) ++counts[static_cast<std::size_t>(region_membership(s.state, p).label)];
        r.region_counts = counts;
    }
    return r;
}

namespace detail {

inline std::filesystem::path suffixed(const std::filesystem::path& p, const std::string& suffix) {
    return p.parent_path() / (p.stem().string() + suffix + p.extension().string());
}

inline std::ofstream open_output(const std::filesystem::path& path, RunSummary& summary) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    summary.files.push_back(path.filename().string());
    return os;
}

inline void write_trajectory_file(const std::filesystem::path& path, const Trajectory& traj, RunSummary& summary) {
    auto os = open_output(path, summary);
    write_trajectory_csv(os, traj);
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "sigma,r_steady_low,r_steady_high,closed_form_stable_radius,closed_form_unstable_radius\n";
    for (const auto& r : rows) {
        os << format_number(r.sigma) << ',' << format_number(r.low.r) << ',' << format_number(r.high.r) << ','
           << format_number(r.closed_form_stable) << ','
           << (r.closed_form_unstable ? format_number(*r.closed_form_unstable) : std::string("nan")) << '\n';
    }
}

} // namespace detail

inline nlohmann::json to_json(const SystemState& s) {
    return {{"t", s.t}, {"x", s.x}, {"y", s.y}, {"sigma", s.sigma}, {"r", s.r()}};
}

inline nlohmann::json to_json(const EnvelopeReport& e) {
    return {{"holds", e.holds},
            {"first_violation", optional_json(e.first_violation)},
            {"exit_time", optional_json(e.exit_time)},
            {"checked_until", e.checked_until},
            {"samples_checked", e.samples_checked}};
}

inline nlohmann::json summary_to_json(const RunSummary& s) {
    using nlohmann::json;
    json j;
    j["scenario"] = s.scenario;
    j["kind"] = to_string(s.kind);
    j["terminal_state"] = s.terminal ? to_json(*s.terminal) : json(nullptr);
    j["probes"] = s.probes;
    j["detected_events"] = s.events;
    j["first_event_time"] = optional_json(s.first_event_time);
    j["sigma_zero_crossing_time"] = optional_json(s.sigma_zero_crossing);
    j["activation_time"] = optional_json(s.activation_time);
    j["sup_r_after_activation"] = optional_json(s.sup_r_after_activation);
    if (s.uncontrolled_sup_r) {
        j["uncontrolled"] = {{"sup_r", *s.uncontrolled_sup_r},
                             {"terminal_r", optional_json(s.uncontrolled_terminal_r)}};
    }

    // Analysis block.
    json analysis;
    json region_counts = nullptr;
    json envelope_holds = nullptr;
    json first_violation = nullptr;
    if (!s.runs.empty()) {
        const auto& main = s.runs.front();
        if (main.region_counts)
            region_counts = {{"R1", (*main.region_counts)[0]},
                             {"R2", (*main.region_counts)[1]},
                             {"outside", (*main.region_counts)[2]}};
        bool any = false, holds = true;
        for (const auto& r : s.runs) {
            if (!r.envelope) continue;
            any = true;
            holds = holds && r.envelope->holds;
            if (r.envelope->first_violation && first_violation.is_null())
                first_violation = *r.envelope->first_violation;
        }
        if (any) envelope_holds = holds;
    }
    analysis["region_counts"] = region_counts;
    analysis["envelope_holds"] = envelope_holds;
    analysis["first_violation"] = first_violation;
    json recovery = json::array();
    json runs = json::array();
    for (const auto& r : s.runs) {
        json rj;
        rj["sigma0"] = r.sigma0;
        rj["terminal_state"] = to_json(r.terminal);
        rj["sigma_zero_crossing_time"] = optional_json(r.sigma_zero_crossing);
        rj["envelope"] = r.envelope ? to_json(*r.envelope) : json(nullptr);
        if (r.recovery) {
            rj["recovery_time"] = r.recovery->time;
            rj["recovered"] = r.recovery->reached;
            recovery.push_back({{"sigma0", r.sigma0}, {"time", r.recovery->time}, {"reached", r.recovery->reached}});
        }
        runs.push_back(rj);
    }
    analysis["recovery_times"] = recovery;
    json estimates = json::array();
    for (const auto& d : s.detections)
        estimates.push_back({{"n", d.n},
                             {"t_s", d.t_s},
                             {"sigma_n", optional_json(d.sigma_n)},
                             {"sigma_true", optional_json(d.sigma_true)}});
    analysis["sigma_estimates"] = estimates;
    j["analysis"] = analysis;
    j["runs"] = runs;

    if (!s.sweep.empty()) {
        json sw;
        sw["points"] = s.sweep.size();
        double max_dev = 0.0;
        for (const auto& r : s.sweep)
            if (r.closed_form_stable > 0) max_dev = std::max(max_dev, std::abs(r.high.r - r.closed_form_stable));
        sw["max_high_start_deviation"] = max_dev;
        j["sweep"] = sw;
    }
    if (s.basin) {
        json strata = json::array();
        for (const auto& st : s.basin->strata)
            strata.push_back({{"stratum", to_string(st.stratum)},
                              {"samples", st.samples},
                              {"converged_to_E1", st.converged},
                              {"converged_fraction", st.converged_fraction()},
                              {"reached_M3", st.reached_outer_cycle},
                              {"left_region", st.left_region},
                              {"max_margin_violation", st.max_violation}});
        j["basin"] = {{"strata", strata}};
    }
    j["notes"] = s.notes;
    j["warnings"] = s.warnings;
    j["files"] = s.files;
    return j;
}

/// Executes the scenario and writes its declared outputs into `out_dir`.
/// A NonFiniteState abort still writes the samples recorded up to the abort.
inline RunSummary run_scenario(const ScenarioSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    const auto started = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);

    RunSummary summary;
    summary.scenario = spec.name;
    summary.kind = spec.kind;
    const auto out_path = [&](const std::optional<std::string>& rel) { return out_dir / *rel; };

    if (spec.kind == ScenarioKind::sweep) {
        const auto grid = linear_grid(spec.sweep.sigma_min, spec.sweep.sigma_max, spec.sweep.steps);
        summary.sweep = bifurcation_sweep(spec.params, grid, spec.integrator);
        if (spec.outputs.sweep_csv) {
            auto os = detail::open_output(out_path(spec.outputs.sweep_csv), summary);
            detail::write_sweep_csv(os, summary.sweep);
        }
        summary.notes.push_back("epsilon forced to 0: sigma is held at each grid value");
    } else if (spec.kind == ScenarioKind::basin) {
        BasinOptions opts;
        opts.integrator = spec.integrator;
        summary.basin = basin_mc(spec.params, spec.basin.samples, spec.basin.seed, opts);
    } else {
        SimulationOptions opts;
        opts.probes = spec.probes;
        opts.measurement = spec.measurement;
        if (spec.control_gain) opts.controller = ControlPolicy(*spec.control_gain);

        const bool unforced = spec.forcing.empty() && !spec.probes;
        std::vector<double> sigma0s = spec.sigma0_variants;
        const bool variants = !sigma0s.empty();
        if (!variants) sigma0s.push_back(spec.initial.sigma);

        for (std::size_t i = 0; i < sigma0s.size(); ++i) {
            SystemState init = spec.initial;
            init.sigma = sigma0s[i];
            SimulationResult res{Trajectory{spec.params, spec.integrator, 0, {}, {}}, {}, std::nullopt};
            const std::string suffix = variants ? "_" + std::to_string(i + 1) : "";
            try {
                simulate_into(res, init, spec.params, spec.forcing, spec.integrator, opts);
            } catch (const NonFiniteState&) {
                if (spec.outputs.trajectory_csv)
                    detail::write_trajectory_file(detail::suffixed(out_path(spec.outputs.trajectory_csv), suffix),
                                                  res.trajectory, summary);
                if (spec.outputs.detection_jsonl) {
                    auto os = detail::open_output(
                        detail::suffixed(out_path(spec.outputs.detection_jsonl), suffix), summary);
                    write_detections_jsonl(os, res.detections);
                }
                throw;
            }
            if (spec.outputs.trajectory_csv)
                detail::write_trajectory_file(detail::suffixed(out_path(spec.outputs.trajectory_csv), suffix),
                                              res.trajectory, summary);
            if (spec.outputs.detection_jsonl) {
                auto os =
                    detail::open_output(detail::suffixed(out_path(spec.outputs.detection_jsonl), suffix), summary);
                write_detections_jsonl(os, res.detections);
            }
            for (const auto& w : res.trajectory.warnings) summary.warnings.push_back(w);

            summary.runs.push_back(analyse_run(res.trajectory, spec.recovery_fraction, unforced));
            if (i == 0) {
                summary.terminal = res.trajectory.back();
                summary.sigma_zero_crossing = summary.runs.back().sigma_zero_crossing;
                summary.detections = res.detections;
                summary.probes = res.detections.size();
                for (const auto& d : res.detections) {
                    if (!d.event) continue;
                    ++summary.events;
                    if (!summary.first_event_time) summary.first_event_time = d.t_f;
                }
                if (res.controller) {
                    summary.activation_time = res.controller->activation_time();
                    if (summary.activation_time)
                        summary.sup_r_after_activation = sup_r_after(res.trajectory, *summary.activation_time);
                }
            }
        }

        if (spec.control_gain) {
            summary.notes.push_back(
                "feedback acts on (x, y) only: sigma still converges to c3 and the controller holds the state "
                "near the origin, which is unstable for sigma > 0");
        }
        if (spec.compare_uncontrolled) {
            SimulationOptions free = opts;
            free.controller.reset();
            SystemState init = spec.initial;
            if (variants) init.sigma = sigma0s.front();
            const auto res = simulate(init, spec.params, spec.forcing, spec.integrator, free);
            summary.uncontrolled_sup_r = max_r(res.trajectory);
            summary.uncontrolled_terminal_r = res.trajectory.back().r();
            if (spec.outputs.trajectory_csv)
                detail::write_trajectory_file(detail::suffixed(out_path(spec.outputs.trajectory_csv), "_uncontrolled"),
                                              res.trajectory, summary);
        }
    }

    if (spec.outputs.summary_json) summary.files.push_back(*spec.outputs.summary_json);
    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (spec.outputs.summary_json) {
        std::ofstream os(out_path(spec.outputs.summary_json), std::ios::binary);
        if (!os) throw Error("cannot write " + out_path(spec.outputs.summary_json).string());
        os << summary_to_json(summary).dump(2) << '\n';
    }
    return summary;
}

} // namespace slowfast
