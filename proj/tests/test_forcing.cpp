#include "slowfast/forcing.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace slowfast;

TEST_CASE("empty program produces no forcing") {
    const ForcingProgram fp;
    const auto z = forcing_at(12.3, fp);
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);
    CHECK(z.sigma == 0.0);
}

TEST_CASE("rectangular pulse support") {
    ForcingProgram fp;
    fp.pulses.push_back({Channel::x, 10.0, 0.2, 0.5});
    CHECK(forcing_at(10.1, fp).x == 0.5);
    CHECK(forcing_at(10.1, fp).y == 0.0);
    CHECK(forcing_at(10.3, fp).x == 0.0);
    CHECK(forcing_at(9.99, fp).x == 0.0);
    // Closed interval.
    CHECK(forcing_at(10.0, fp).x == 0.5);
    CHECK(forcing_at(10.2, fp).x == 0.5);
}

TEST_CASE("overlapping pulses add per channel") {
    ForcingProgram fp;
    fp.pulses.push_back({Channel::y, 0.0, 1.0, 0.25});
    fp.pulses.push_back({Channel::y, 0.5, 1.0, 0.5});
    fp.pulses.push_back({Channel::sigma, 0.5, 1.0, -1.0});
    const auto z = forcing_at(0.75, fp);
    CHECK(z.y == 0.75);
    CHECK(z.sigma == -1.0);
    CHECK(z.x == 0.0);
}

TEST_CASE("channel names round trip") {
    for (Channel c : {Channel::x, Channel::y, Channel::sigma}) CHECK(parse_channel(to_string(c)) == c);
    CHECK_FALSE(parse_channel("z").has_value());
}

TEST_CASE("counter-based normals are pure and roughly standard") {
    CHECK(counter_normal(1, 2, 3) == counter_normal(1, 2, 3));
    CHECK(counter_normal(1, 2, 3) != counter_normal(1, 2, 4));
    CHECK(counter_normal(1, 2, 3) != counter_normal(2, 2, 3));
    CHECK(counter_normal(1, 2, 3) != counter_normal(1, 3, 3));

    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double v = counter_normal(42, 0, i);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    // 5 standard errors.
    CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("held noise is constant within a hold interval and scaled by 1/sqrt(hold)") {
    NoiseSpec n;
    n.stddev = 0.3;
    n.seed = 9;
    n.hold = 0.25;
    CHECK(noise_value(n, Channel::x, 1.01) == noise_value(n, Channel::x, 1.2));
    CHECK(noise_value(n, Channel::x, 1.01) != noise_value(n, Channel::x, 1.26));
    CHECK(noise_value(n, Channel::x, 1.01) != noise_value(n, Channel::y, 1.01));
    CHECK(noise_value(n, Channel::x, 1.01) == 0.3 * counter_normal(9, 0, 4) / 0.5);

    n.hold = 0.0;
    CHECK_THROWS_AS(noise_value(n, Channel::x, 1.0), ValidationError);
}

TEST_CASE("noise only on selected channels") {
    ForcingProgram fp;
    fp.noise = NoiseSpec{{false, true, false}, 0.1, 1, 0.01};
    const auto z = forcing_at(0.5, fp);
    CHECK(z.x == 0.0);
    CHECK(z.y != 0.0);
    CHECK(z.sigma == 0.0);
}

TEST_CASE("digest distinguishes programs and is stable") {
    ForcingProgram a, b;
    a.pulses.push_back({Channel::x, 1.0, 0.2, 0.5});
    b.pulses.push_back({Channel::x, 1.0, 0.2, 0.5});
    CHECK(digest(a) == digest(b));
    b.pulses[0].amplitude = 0.5000001;
    CHECK(digest(a) != digest(b));
    b = a;
    b.impulses.push_back({2.0, 0.1, 0.0, 0.0});
    CHECK(digest(a) != digest(b));
    CHECK(digest(ForcingProgram{}) == digest(ForcingProgram{}));
}
