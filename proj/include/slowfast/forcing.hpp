#pragma once

#include "slowfast/errors.hpp"
#include "slowfast/model.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slowfast {

enum class Channel { x, y, sigma };

inline const char* to_string(Channel c) noexcept {
    switch (c) {
    case Channel::x: return "x";
    case Channel::y: return "y";
    case Channel::sigma: return "sigma";
    }
    return "?";
}

inline std::optional<Channel> parse_channel(std::string_view s) noexcept {
    if (s == "x") return Channel::x;
    if (s == "y") return Channel::y;
    if (s == "sigma") return Channel::sigma;
    return std::nullopt;
}

/// Rectangular pulse, active on the closed interval [start, start + width].
struct Pulse {
    Channel channel = Channel::x;
    double start = 0.0;
    double width = 0.0;
    double amplitude = 0.0;

    double end() const noexcept { return start + width; }
    bool active(double t) const noexcept { return t >= start && t <= end(); }
};

/// Instantaneous state jump applied between integrator steps.
struct Impulse {
    double time = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    double dsigma = 0.0;
};

/// White-noise forcing held constant over intervals of length `hold`; each held
/// value is stddev * N(0,1) * sqrt(hold) / hold so that the integrated increment
/// has variance stddev^2 * hold. `hold <= 0` means "use the integrator step".
struct NoiseSpec {
    std::array<bool, 3> channels{true, true, false};
    double stddev = 0.0;
    std::uint64_t seed = 0;
    double hold = 0.0;
};

struct ForcingProgram {
    std::vector<Pulse> pulses;
    std::vector<Impulse> impulses;
    std::optional<NoiseSpec> noise;

    bool empty() const noexcept { return pulses.empty() && impulses.empty() && !noise; }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double unit_open(std::uint64_t bits) noexcept {
    // 53 random bits mapped into (0, 1).
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace detail

/// Standard normal variate addressed by (seed, stream, index). Pure function, so
/// forcing can be evaluated at any time in any order with identical results.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::int64_t index) noexcept {
    const std::uint64_t key = detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
    const std::uint64_t k = detail::splitmix64(key ^ static_cast<std::uint64_t>(index));
    const double u1 = detail::unit_open(k);
    const double u2 = detail::unit_open(detail::splitmix64(k));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double noise_value(const NoiseSpec& n, Channel channel, double t) {
    if (!(n.hold > 0)) throw ValidationError("forcing.noise.hold", "must be > 0 when evaluating noise");
    const auto k = static_cast<std::int64_t>(std::floor(t / n.hold));
    return n.stddev * counter_normal(n.seed, static_cast<std::uint64_t>(channel), k) / std::sqrt(n.hold);
}

/// Sum of all pulses active at t plus the held noise sample for t.
inline Forcing forcing_at(double t, const ForcingProgram& fp) {
    Forcing z;
    for (const auto& pulse : fp.pulses) {
        if (!pulse.active(t)) continue;
        switch (pulse.channel) {
        case Channel::x: z.x += pulse.amplitude; break;
        case Channel::y: z.y += pulse.amplitude; break;
        case Channel::sigma: z.sigma += pulse.amplitude; break;
        }
    }
    if (fp.noise && fp.noise->stddev != 0.0) {
        const auto& n = *fp.noise;
        if (n.channels[0]) z.x += noise_value(n, Channel::x, t);
        if (n.channels[1]) z.y += noise_value(n, Channel::y, t);
        if (n.channels[2]) z.sigma += noise_value(n, Channel::sigma, t);
    }
    return z;
}

/// Stable 64-bit FNV-1a digest of the program, for trajectory metadata.
inline std::uint64_t digest(const ForcingProgram& fp) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    auto mix_double = [&](double v) { mix(&v, sizeof v); };
    for (const auto& p : fp.pulses) {
        const int ch = static_cast<int>(p.channel);
        mix(&ch, sizeof ch);
        mix_double(p.start);
        mix_double(p.width);
        mix_double(p.amplitude);
    }
    const char sep = '|';
    mix(&sep, 1);
    for (const auto& i : fp.impulses) {
        mix_double(i.time);
        mix_double(i.dx);
        mix_double(i.dy);
        mix_double(i.dsigma);
    }
    mix(&sep, 1);
    if (fp.noise) {
        for (bool c : fp.noise->channels) mix(&c, 1);
        mix_double(fp.noise->stddev);
        mix(&fp.noise->seed, sizeof fp.noise->seed);
        mix_double(fp.noise->hold);
    }
    return h;
}

} // namespace slowfast
