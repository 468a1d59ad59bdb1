#include "slowfast/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slowfast;
using Catch::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("slowfast_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string field_of(const json& j) {
    try {
        scenario_from_json(j);
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<accepted>";
}

json minimal() {
    return {{"name", "t"},
            {"params", {{"omega", 2}, {"a", 1}, {"b", 1}, {"c1", -0.9}, {"c2", -0.7}, {"c3", 0.5}, {"epsilon", 0.1}}},
            {"initial", {{"x", 0.1}, {"y", 0.1}, {"sigma", -0.8}}},
            {"integrator", {{"dt", 1e-2}, {"horizon", 5.0}}}};
}

} // namespace

TEST_CASE("every built-in scenario is valid and survives a JSON round trip") {
    for (const auto& name : builtin_names()) {
        INFO(name);
        const auto spec = builtin_scenario(name);
        REQUIRE(spec);
        CHECK_NOTHROW(spec->validate());
        const json j = to_json(*spec);
        CHECK(to_json(scenario_from_json(j)) == j);
    }
    CHECK_FALSE(builtin_scenario("fig3"));
}

TEST_CASE("scenario validation reports the offending field") {
    auto j = minimal();
    CHECK(field_of(j) == "<accepted>");

    j = minimal();
    j["bogus"] = 1;
    CHECK(field_of(j) == "bogus");

    j = minimal();
    j["params"]["eps"] = 0.1;
    CHECK(field_of(j) == "params.eps");

    j = minimal();
    j["params"].erase("c2");
    CHECK(field_of(j) == "params.c2");

    j = minimal();
    j["params"]["c2"] = -1.0;
    CHECK(field_of(j).rfind("params", 0) == 0);

    j = minimal();
    j["kind"] = "movie";
    CHECK(field_of(j) == "kind");

    j = minimal();
    j["outputs"] = {{"trajectory_csv", "a.csv"}, {"summary_json", "a.csv"}};
    CHECK(field_of(j) == "outputs.summary_json");

    j = minimal();
    j["control"] = {{"gain", 1.4}};
    CHECK(field_of(j) == "control");

    j = minimal();
    j["forcing"] = {{"pulses", {{{"channel", "w"}, {"start", 1}, {"width", 1}, {"amplitude", 1}}}}};
    CHECK(field_of(j) == "forcing.pulses[0].channel");

    j = minimal();
    j["integrator"]["dt"] = 0.0;
    CHECK(field_of(j) == "integrator.dt");
}

TEST_CASE("resolve_scenario accepts names and files") {
    CHECK(resolve_scenario("fig7").name == "fig7");
    const auto dir = fresh_dir("resolve");
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "s.json");
        os << minimal().dump();
    }
    CHECK(resolve_scenario((dir / "s.json").string()).name == "t");
    CHECK_THROWS_AS(resolve_scenario("no_such_scenario"), ValidationError);
}

TEST_CASE("reruns reproduce every output byte for byte") {
    auto spec = *builtin_scenario("fig8");
    spec.integrator.horizon = 150.0;
    const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
    const auto sa = run_scenario(spec, a);
    run_scenario(spec, b);
    REQUIRE(sa.files.size() >= 4);
    for (const auto& f : sa.files) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("trajectory and detection outputs") {
    const auto dir = fresh_dir("fig7");
    const auto sum = run_scenario(*builtin_scenario("fig7"), dir);

    std::ifstream csv(dir / "fig7_trajectory.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == trajectory_csv_header);

    std::ifstream jl(dir / "fig7_detections.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(jl, line); ++lines) {
        const auto rec = json::parse(line);
        CHECK(rec.contains("n"));
        CHECK(rec.contains("sigma_n"));
        CHECK(rec.contains("event"));
    }
    CHECK(lines == sum.probes);

    const auto summary = json::parse(slurp(dir / "fig7_summary.json"));
    CHECK(summary["scenario"] == "fig7");
    CHECK(summary["detected_events"].get<std::size_t>() == sum.events);
    CHECK_FALSE(summary.contains("wall_seconds"));
    CHECK(summary["analysis"].contains("sigma_estimates"));
}

TEST_CASE("sweep scenario writes the documented columns") {
    auto spec = *builtin_scenario("fig2_sweep");
    spec.sweep.steps = 5;
    const auto dir = fresh_dir("sweep");
    run_scenario(spec, dir);
    std::ifstream csv(dir / "fig2_sweep.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "sigma,r_steady_low,r_steady_high,closed_form_stable_radius,closed_form_unstable_radius");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == 5);
}

TEST_CASE("the kicked run settles on the outer cycle at c3") {
    const auto spec = *builtin_scenario("fig4");
    const auto sum = run_scenario(spec, fresh_dir("fig4"));
    REQUIRE(sum.terminal);
    CHECK(std::abs(sum.terminal->r() - (1.0 + std::sqrt(1.5))) < 1e-3);
    CHECK(sum.terminal->sigma == Approx(0.5).margin(1e-6));
}

TEST_CASE("variant runs are written with numbered suffixes") {
    auto spec = *builtin_scenario("fig5");
    spec.integrator.horizon = 5.0;
    const auto dir = fresh_dir("variants");
    const auto sum = run_scenario(spec, dir);
    CHECK(sum.runs.size() == 3);
    for (const char* f : {"fig5_trajectory_1.csv", "fig5_trajectory_2.csv", "fig5_trajectory_3.csv"})
        CHECK(fs::exists(dir / f));
}

TEST_CASE("numerical abort keeps the partial outputs") {
    auto j = minimal();
    j["initial"] = {{"x", 1e3}, {"y", 1e3}, {"sigma", 0.0}};
    j["integrator"] = {{"dt", 0.5}, {"horizon", 50.0}};
    j["outputs"] = {{"trajectory_csv", "blowup.csv"}};
    const auto spec = scenario_from_json(j);
    const auto dir = fresh_dir("abort");
    CHECK_THROWS_AS(run_scenario(spec, dir), NonFiniteState);
    REQUIRE(fs::exists(dir / "blowup.csv"));
    CHECK(slurp(dir / "blowup.csv").size() > std::string(trajectory_csv_header).size());
}
