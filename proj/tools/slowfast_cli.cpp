// Command-line front end: run built-in or file scenarios, sweeps and basin checks.

#include "slowfast/slowfast.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

using namespace slowfast;

constexpr int exit_ok = 0;
constexpr int exit_other = 1;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

std::string default_out_dir() {
    if (const char* env = std::getenv("SLOWFAST_OUT_DIR"); env && *env) return env;
    return "out";
}

void print_summary(const RunSummary& s) {
    std::printf("scenario          %s (%s)\n", s.scenario.c_str(), to_string(s.kind));
    if (s.terminal)
        std::printf("terminal state    t=%g x=%.6g y=%.6g sigma=%.6g r=%.6g\n", s.terminal->t, s.terminal->x,
                    s.terminal->y, s.terminal->sigma, s.terminal->r());
    if (s.probes) std::printf("probes            %zu, events %zu\n", s.probes, s.events);
    if (s.first_event_time) std::printf("first event       t=%.6g\n", *s.first_event_time);
    if (s.sigma_zero_crossing) std::printf("sigma crosses 0   t=%.6g\n", *s.sigma_zero_crossing);
    if (s.activation_time) std::printf("control active    t=%.6g\n", *s.activation_time);
    if (s.sup_r_after_activation) std::printf("sup r after act.  %.6g\n", *s.sup_r_after_activation);
    if (s.uncontrolled_sup_r)
        std::printf("uncontrolled      sup r %.6g, terminal r %.6g\n", *s.uncontrolled_sup_r,
                    s.uncontrolled_terminal_r.value_or(0.0));
    for (const auto& r : s.runs) {
        if (s.runs.size() > 1 || r.recovery)
            std::printf("run sigma0=%-7g  recovery %s%s\n", r.sigma0,
                        r.recovery ? format_number(r.recovery->time).c_str() : "-",
                        r.recovery && !r.recovery->reached ? " (not reached)" : "");
        if (r.envelope)
            std::printf("envelope          %s (%zu samples)\n", r.envelope->holds ? "holds" : "VIOLATED",
                        r.envelope->samples_checked);
    }
    if (!s.sweep.empty()) std::printf("sweep points      %zu\n", s.sweep.size());
    if (s.basin)
        for (const auto& st : s.basin->strata)
            std::printf("stratum %-12s %zu/%zu converged to E1, %zu reached M3, %zu left region\n",
                        to_string(st.stratum), st.converged, st.samples, st.reached_outer_cycle, st.left_region);
    for (const auto& n : s.notes) std::printf("note: %s\n", n.c_str());
    for (const auto& w : s.warnings) std::printf("warning: %s\n", w.c_str());
    for (const auto& f : s.files) std::printf("wrote %s\n", f.c_str());
    std::printf("wall clock        %.3f s\n", s.wall_seconds);
}

int execute(const ScenarioSpec& spec, const std::string& out_dir) {
    const auto summary = run_scenario(spec, out_dir);
    print_summary(summary);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slow-fast excitability simulator: scenarios, sweeps, basin checks"};
    app.require_subcommand(1);

    std::string out_dir = default_out_dir();

    auto* run = app.add_subcommand("run", "Run a built-in scenario or a scenario JSON file");
    std::string target;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt, horizon;
    run->add_option("scenario", target, "Built-in name or path")->required();
    run->add_option("--out", out_dir, "Output directory (default: $SLOWFAST_OUT_DIR or ./out)");
    run->add_option("--seed", seed, "Seed for noise, measurement noise and basin sampling");
    run->add_option("--dt", dt, "Override the integrator step");
    run->add_option("--horizon", horizon, "Override the horizon");

    auto* sweep = app.add_subcommand("sweep", "Bifurcation sweep over fixed sigma (epsilon = 0)");
    SweepSpec sweep_spec;
    sweep->add_option("--sigma-min", sweep_spec.sigma_min)->capture_default_str();
    sweep->add_option("--sigma-max", sweep_spec.sigma_max)->capture_default_str();
    sweep->add_option("--steps", sweep_spec.steps, "Number of grid points")->capture_default_str();
    sweep->add_option("--out", out_dir, "Output directory");

    auto* basin = app.add_subcommand("basin", "Monte-Carlo check of the region of attraction of E1");
    BasinSpec basin_spec;
    basin->add_option("--samples", basin_spec.samples)->capture_default_str();
    basin->add_option("--seed", basin_spec.seed)->capture_default_str();
    basin->add_option("--out", out_dir, "Output directory");

    auto* list = app.add_subcommand("list", "List built-in scenarios");
    auto* show = app.add_subcommand("show", "Print a scenario as JSON");
    std::string show_target;
    show->add_option("scenario", show_target, "Built-in name or path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_validation;
    }

    try {
        if (*list) {
            for (const auto& n : builtin_names()) std::cout << n << '\n';
            return exit_ok;
        }
        if (*show) {
            std::cout << to_json(resolve_scenario(show_target)).dump(2) << '\n';
            return exit_ok;
        }
        if (*run) {
            auto spec = resolve_scenario(target);
            if (dt) spec.integrator.dt = *dt;
            if (horizon) spec.integrator.horizon = *horizon;
            if (seed) {
                if (spec.forcing.noise) spec.forcing.noise->seed = *seed;
                spec.measurement.seed = *seed;
                spec.basin.seed = *seed;
            }
            return execute(spec, out_dir);
        }
        if (*sweep) {
            auto spec = *builtin_scenario("fig2_sweep");
            spec.name = "sweep";
            spec.sweep = sweep_spec;
            spec.outputs = {};
            spec.outputs.sweep_csv = "sweep.csv";
            spec.outputs.summary_json = "sweep_summary.json";
            return execute(spec, out_dir);
        }
        if (*basin) {
            auto spec = *builtin_scenario("basin_mc");
            spec.name = "basin";
            spec.basin = basin_spec;
            spec.outputs = {};
            spec.outputs.summary_json = "basin_summary.json";
            return execute(spec, out_dir);
        }
    } catch (const ValidationError& e) {
        std::cerr << "invalid " << e.field() << ": " << e.what() << '\n';
        return exit_validation;
    } catch (const BoundaryCase& e) {
        std::cerr << "boundary case: " << e.what() << '\n';
        return exit_validation;
    } catch (const NonFiniteState& e) {
        std::cerr << "numerical abort: " << e.what() << " (partial outputs written)\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_other;
    }
    return exit_other;
}
