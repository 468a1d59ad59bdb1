#include "slowfast/control.hpp"
#include "slowfast/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

using namespace slowfast;
using Catch::Approx;

TEST_CASE("control input examples") {
    const ControlPolicy idle(1.4);
    CHECK(control_input({0, 0.5, -0.2, 0}, idle) == ControlInput{0, 0});
    CHECK(idle.effective_gain() == 0.0);

    const auto on = idle.on_event(45.0);
    CHECK(on.latched());
    CHECK(*on.activation_time() == 45.0);
    CHECK(on.effective_gain() == 1.4);
    const auto u = control_input({0, 0.5, -0.2, 0}, on);
    CHECK(u.x == Approx(-0.7));
    CHECK(u.y == Approx(0.28));
    CHECK(control_input({0, 0, 0, 0.3}, on) == ControlInput{0, 0});
}

TEST_CASE("latch is idempotent") {
    const auto once = ControlPolicy(1.4).on_event(45.0);
    const auto twice = once.on_event(60.0);
    CHECK(*twice.activation_time() == 45.0);
    CHECK(twice.latched());
    CHECK(twice.gain() == once.gain());
}

TEST_CASE("gain validation") {
    CHECK_THROWS_AS(ControlPolicy(-0.1), ValidationError);
    CHECK_THROWS_AS(ControlPolicy(INFINITY), ValidationError);
    CHECK_NOTHROW(ControlPolicy(0.0));
}

namespace {

SimulationResult run_probed(const ScenarioSpec& spec, std::optional<double> gain) {
    SimulationOptions opts;
    opts.probes = spec.probes;
    if (gain) opts.controller = ControlPolicy(*gain);
    return simulate(spec.initial, spec.params, spec.forcing, spec.integrator, opts);
}

bool identical(const Trajectory& a, const Trajectory& b) {
    if (a.samples.size() != b.samples.size()) return false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const auto& s = a.samples[i].state;
        const auto& t = b.samples[i].state;
        if (std::memcmp(&s, &t, sizeof s) != 0) return false;
    }
    return true;
}

} // namespace

TEST_CASE("zero gain reproduces the uncontrolled probed run bit for bit") {
    const auto spec = *builtin_scenario("fig8");
    const auto free = run_probed(spec, std::nullopt);
    const auto zero = run_probed(spec, 0.0);
    CHECK(identical(free.trajectory, zero.trajectory));
    REQUIRE(zero.controller);
    CHECK(zero.controller->latched());
}

TEST_CASE("without an event the controller never acts") {
    auto spec = *builtin_scenario("fig8");
    spec.integrator.horizon = 100.0;  // before sigma approaches zero
    const auto free = run_probed(spec, std::nullopt);
    const auto ctl = run_probed(spec, 1.4);
    CHECK_FALSE(ctl.controller->latched());
    CHECK(identical(free.trajectory, ctl.trajectory));
    for (const auto& s : ctl.trajectory.samples) CHECK(s.control == ControlInput{0, 0});
}

TEST_CASE("feedback keeps the state away from the outer cycle") {
    const auto spec = *builtin_scenario("fig8");
    const double m3 = *attractor_catalog(spec.params)[3].outer.squared_radius;
    const auto ctl = run_probed(spec, 1.4);
    const auto free = run_probed(spec, std::nullopt);
    REQUIRE(ctl.controller->activation_time());
    const double t_on = *ctl.controller->activation_time();

    double sup = 0.0;
    for (const auto& s : ctl.trajectory.samples) {
        if (s.state.t > t_on) {
            sup = std::max(sup, s.state.r());
            CHECK(s.control.x == Approx(-1.4 * s.state.x));
        } else {
            CHECK(s.control == ControlInput{0, 0});
        }
    }
    CHECK(sup < 0.25 * m3);
    CHECK(std::abs(free.trajectory.back().r() - m3) < 1e-2);
    // Sigma is not controlled and still reaches c3.
    CHECK(ctl.trajectory.back().sigma == Approx(spec.params.c3()).margin(1e-6));
}
