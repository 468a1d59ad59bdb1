#include "slowfast/estimator.hpp"
#include "slowfast/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace slowfast;
using Catch::Approx;

TEST_CASE("estimate inverts exact exponential decay") {
    const auto p = presets::detection();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> sig(-1.5, 0.5), r0s(0.01, 1.0), ts(0.1, 5.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double sigma0 = sig(rng), r0 = r0s(rng), t = ts(rng);
        const double rt = r0 * std::exp(-mu_bound(sigma0, r0, p) * t);
        worst = std::max(worst, std::abs(estimate_sigma(r0, rt, t, p) - sigma0));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("no change in radius leaves only the radius correction") {
    const auto p = presets::detection();
    CHECK(estimate_sigma(0.3, 0.3, 2.0, p) == Approx(-2.0 * 0.3 + 0.09).epsilon(1e-15));
}

TEST_CASE("estimator preconditions") {
    const auto p = presets::detection();
    CHECK_THROWS_AS(estimate_sigma(0.3, 0.2, 0.0, p), PreconditionError);
    CHECK_THROWS_AS(estimate_sigma(0.3, 0.2, -1.0, p), PreconditionError);
    CHECK_THROWS_AS(estimate_sigma(0.0, 0.2, 1.0, p), DegenerateRadius);
    CHECK_THROWS_AS(estimate_sigma(0.3, 1e-13, 1.0, p), DegenerateRadius);
    CHECK_NOTHROW(estimate_sigma(2e-12, 2e-12, 1.0, p));
}
