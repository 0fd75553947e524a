#pragma once

// JSON and CSV emission for experiment reports. CSV numbers use 17
// significant digits; output is a pure function of the report, so repeated
// runs produce byte-identical files.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "spde/config_io.hpp"
#include "spde/error.hpp"
#include "spde/harness.hpp"

namespace spde {

using nlohmann::json;

[[nodiscard]] inline json to_json(const ExperimentConfig& c) {
    json sweep = json::array();
    for (const auto& r : c.sweep) sweep.push_back({{"n_modes", r.n_modes}, {"k_steps", r.k_steps}});
    return {{"model", c.model},
            {"datum", c.datum},
            {"T", c.horizon},
            {"n_ref", c.reference.n_modes},
            {"k_ref", c.reference.k_steps},
            {"j_modes", c.noise_modes},
            {"sweep", sweep},
            {"samples", c.samples},
            {"p", c.moment_order},
            {"seed", c.seed},
            {"error_time", to_string(c.error_time)},
            {"quadrature_factor", c.quadrature_factor},
            {"holder_finest_lag_exp", c.holder_finest_lag_exp},
            {"holder_coarsest_lag_exp", c.holder_coarsest_lag_exp}};
}

[[nodiscard]] inline json to_json(const std::optional<RateFit>& fit) {
    if (!fit) return {{"applicable", false}, {"slope", nullptr}, {"residual", nullptr}};
    return {{"applicable", true}, {"slope", fit->slope}, {"intercept", fit->intercept},
            {"residual", fit->residual}};
}

[[nodiscard]] inline json to_json(const ErrorPoint& p) {
    return {{"h", p.h},
            {"n_modes", p.n_modes},
            {"k_steps", p.k_steps},
            {"rms_error", p.rms_error},
            {"ci_half_width", p.ci_half_width}};
}

[[nodiscard]] inline json to_json(const ErrorSeries& s) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back(to_json(p));
    return {{"error_time", to_string(s.time)}, {"points", pts}, {"fit", to_json(s.fit)}};
}

[[nodiscard]] inline json to_json(const ErrorReport& r) {
    return {{"kind", "convergence"},
            {"axis", to_string(r.axis)},
            {"model", r.model_id},
            {"samples", r.samples},
            {"fitted_rate", r.fitted_rate() ? json(*r.fitted_rate()) : json(nullptr)},
            {"primary", to_json(r.primary)},
            {"secondary", to_json(r.secondary)},
            {"config", to_json(r.config)}};
}

[[nodiscard]] inline json to_json(const HolderReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"lag", p.h}, {"structure", p.rms_error}, {"ci_half_width", p.ci_half_width}});
    }
    return {{"kind", "holder"},
            {"model", r.model_id},
            {"anchors", r.anchors},
            {"degenerate", r.degenerate},
            {"gamma_hat", r.gamma_hat() ? json(*r.gamma_hat()) : json(nullptr)},
            {"fit", to_json(r.fit)},
            {"points", pts},
            {"config", to_json(r.config)}};
}

[[nodiscard]] inline json to_json(const MomentReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"n_modes", p.n_modes},
                       {"k_steps", p.k_steps},
                       {"sup_moment", p.sup_moment},
                       {"sup_time", p.sup_time},
                       {"ci_half_width", p.ci_half_width},
                       {"initial_norm", p.initial_norm},
                       {"monotone_decay", p.monotone_decay}});
    }
    return {{"kind", "moments"},
            {"model", r.model_id},
            {"growth_flag", r.growth_flag},
            {"points", pts},
            {"config", to_json(r.config)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

/// Two-column rate table for log-log plotting: h,rms_error,ci_half_width.
[[nodiscard]] inline std::string rates_csv(const ErrorSeries& s) {
    std::string out = "h,rms_error,ci_half_width\n";
    for (const auto& p : s.points) {
        out += format_double(p.h) + ',' + format_double(p.rms_error) + ',' + format_double(p.ci_half_width) + '\n';
    }
    return out;
}

[[nodiscard]] inline std::string holder_csv(const HolderReport& r) {
    std::string out = "lag,structure,ci_half_width\n";
    for (const auto& p : r.points) {
        out += format_double(p.h) + ',' + format_double(p.rms_error) + ',' + format_double(p.ci_half_width) + '\n';
    }
    return out;
}

[[nodiscard]] inline std::string moments_csv(const MomentReport& r) {
    std::string out = "n_modes,k_steps,sup_moment,ci_half_width,initial_norm\n";
    for (const auto& p : r.points) {
        out += std::to_string(p.n_modes) + ',' + std::to_string(p.k_steps) + ',' + format_double(p.sup_moment) +
               ',' + format_double(p.ci_half_width) + ',' + format_double(p.initial_norm) + '\n';
    }
    return out;
}

/// Snapshot table: t,c_1,...,c_N (or t,x_1,...,x_M for grid values).
[[nodiscard]] inline std::string trajectory_csv(const Trajectory& traj, const char* column_prefix,
                                                const std::vector<std::vector<double>>& rows) {
    std::string out = "t";
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    for (std::size_t i = 1; i <= width; ++i) out += std::string(",") + column_prefix + std::to_string(i);
    out += '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out += format_double(traj.times[r]);
        for (double v : rows[r]) out += ',' + format_double(v);
        out += '\n';
    }
    return out;
}

} // namespace spde
