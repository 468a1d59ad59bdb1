#pragma once

#include "slowfast/errors.hpp"
#include "slowfast/model.hpp"

#include <cmath>
#include <optional>

namespace slowfast {

struct ControlInput {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

/// Event-triggered linear feedback u = -F(t) (x, y). F(t) is zero until the
/// first detector event and the configured gain forever after.
class ControlPolicy {
public:
    explicit ControlPolicy(double gain) : gain_(gain) {
        if (!std::isfinite(gain) || gain < 0)
            throw ValidationError("control.gain", "must be finite and >= 0");
    }

    double gain() const noexcept { return gain_; }
    bool latched() const noexcept { return latched_; }
    std::optional<double> activation_time() const noexcept { return activation_time_; }

    /// Gain currently in force.
    double effective_gain() const noexcept { return latched_ ? gain_ : 0.0; }

    /// Latches on the first call; later calls return the policy unchanged.
    [[nodiscard]] ControlPolicy on_event(double t) const noexcept {
        if (latched_) return *this;
        ControlPolicy next = *this;
        next.latched_ = true;
        next.activation_time_ = t;
        return next;
    }

private:
    double gain_;
    bool latched_ = false;
    std::optional<double> activation_time_;
};

inline ControlInput control_input(const SystemState& s, const ControlPolicy& policy) noexcept {
    if (!policy.latched()) return {};
    return {-policy.gain() * s.x, -policy.gain() * s.y};
}

} // namespace slowfast
