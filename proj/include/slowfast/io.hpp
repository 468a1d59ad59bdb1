#pragma once

// Plain-text exports: trajectory CSV and detection JSON lines.

#include "slowfast/integrator.hpp"
#include "slowfast/probe.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace slowfast {

inline constexpr const char* trajectory_csv_header = "t,x,y,sigma,zeta_x,zeta_y,zeta_sigma,u_x,u_y";

/// Shortest text that round-trips, at most 17 significant digits.
inline std::string format_number(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline void write_csv_row(std::ostream& os, const Sample& s) {
    const double cols[] = {s.state.t, s.state.x,     s.state.y,     s.state.sigma, s.forcing.x,
                           s.forcing.y, s.forcing.sigma, s.control.x, s.control.y};
    bool first = true;
    for (double v : cols) {
        if (!first) os << ',';
        os << format_number(v);
        first = false;
    }
    os << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << trajectory_csv_header << '\n';
    for (const auto& s : traj.samples) write_csv_row(os, s);
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const DetectionRecord& r) {
    nlohmann::json j;
    j["n"] = r.n;
    j["t_s"] = r.t_s;
    j["t_f"] = r.t_f;
    j["r_s"] = r.r_s;
    j["r_f"] = r.r_f;
    j["sigma_n"] = optional_json(r.sigma_n);
    j["sigma_true"] = optional_json(r.sigma_true);
    j["event"] = r.event;
    return j;
}

inline void write_detections_jsonl(std::ostream& os, const std::vector<DetectionRecord>& records) {
    for (const auto& r : records) os << to_json(r).dump() << '\n';
}

} // namespace slowfast
