#pragma once

// Flat "key = value" configuration documents. One key per line, '#' starts a
// comment, no nesting. Keys mirror ExperimentConfig:
//
//   model, datum, T, n_ref, k_ref, j_modes, sweep, samples, p, seed,
//   error_time, quadrature_factor, holder_finest_lag_exp,
//   holder_coarsest_lag_exp
//
// `sweep` is a comma-separated list of N:K pairs.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spde/error.hpp"
#include "spde/harness.hpp"

namespace spde {

/// 17 significant digits; round-trips every double.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size()) return x;
    } catch (const std::logic_error&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
}

} // namespace detail

[[nodiscard]] inline std::vector<Resolution> parse_sweep(const std::string& text) {
    std::vector<Resolution> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("sweep entry '" + item + "' is not N:K");
        out.push_back({detail::parse_int<std::size_t>("sweep", detail::trim(item.substr(0, colon))),
                       detail::parse_int<std::size_t>("sweep", detail::trim(item.substr(colon + 1)))});
    }
    return out;
}

[[nodiscard]] inline std::string format_sweep(const std::vector<Resolution>& sweep) {
    std::string s;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(sweep[i].n_modes) + ':' + std::to_string(sweep[i].k_steps);
    }
    return s;
}

[[nodiscard]] inline ErrorTime parse_error_time(const std::string& v) {
    if (v == "final") return ErrorTime::final_time;
    if (v == "sup" || v == "sup_over_grid") return ErrorTime::sup_over_grid;
    throw ConfigError("error_time must be 'final' or 'sup_over_grid', got '" + v + "'");
}

/// Parses a flat document into key/value pairs; duplicate keys are an error.
[[nodiscard]] inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        auto key = detail::trim(std::string_view(line).substr(0, eq));
        auto value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) throw ConfigError("config key '" + key + "' given twice");
    }
    return kv;
}

/// Applies one key to cfg. Returns false for keys it does not know.
inline bool apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
    if (key == "model") cfg.model = v;
    else if (key == "datum") cfg.datum = v;
    else if (key == "T") cfg.horizon = detail::parse_real(key, v);
    else if (key == "n_ref") cfg.reference.n_modes = detail::parse_int<std::size_t>(key, v);
    else if (key == "k_ref") cfg.reference.k_steps = detail::parse_int<std::size_t>(key, v);
    else if (key == "j_modes") cfg.noise_modes = detail::parse_int<std::size_t>(key, v);
    else if (key == "sweep") cfg.sweep = parse_sweep(v);
    else if (key == "samples") cfg.samples = detail::parse_int<std::size_t>(key, v);
    else if (key == "p") cfg.moment_order = detail::parse_real(key, v);
    else if (key == "seed") cfg.seed = detail::parse_int<std::uint64_t>(key, v);
    else if (key == "error_time") cfg.error_time = parse_error_time(v);
    else if (key == "quadrature_factor") cfg.quadrature_factor = detail::parse_int<std::size_t>(key, v);
    else if (key == "holder_finest_lag_exp") cfg.holder_finest_lag_exp = detail::parse_int<int>(key, v);
    else if (key == "holder_coarsest_lag_exp") cfg.holder_coarsest_lag_exp = detail::parse_int<int>(key, v);
    else return false;
    return true;
}

/// Canonical flat serialization, keys in a fixed order.
[[nodiscard]] inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "model = " << cfg.model << '\n'
       << "datum = " << cfg.datum << '\n'
       << "T = " << format_double(cfg.horizon) << '\n'
       << "n_ref = " << cfg.reference.n_modes << '\n'
       << "k_ref = " << cfg.reference.k_steps << '\n'
       << "j_modes = " << cfg.noise_modes << '\n'
       << "sweep = " << format_sweep(cfg.sweep) << '\n'
       << "samples = " << cfg.samples << '\n'
       << "p = " << format_double(cfg.moment_order) << '\n'
       << "seed = " << cfg.seed << '\n'
       << "error_time = " << to_string(cfg.error_time) << '\n'
       << "quadrature_factor = " << cfg.quadrature_factor << '\n'
       << "holder_finest_lag_exp = " << cfg.holder_finest_lag_exp << '\n'
       << "holder_coarsest_lag_exp = " << cfg.holder_coarsest_lag_exp << '\n';
    return os.str();
}

/// Reads a config document over `base`; unknown keys other than those in
/// `extra_keys` are rejected. Extra keys are returned untouched.
inline std::map<std::string, std::string> load_config(std::istream& is, ExperimentConfig& base,
                                                      const std::vector<std::string>& extra_keys = {}) {
    std::map<std::string, std::string> extras;
    for (const auto& [k, v] : parse_key_values(is)) {
        if (apply_config_key(base, k, v)) continue;
        if (std::find(extra_keys.begin(), extra_keys.end(), k) != extra_keys.end()) {
            extras.emplace(k, v);
            continue;
        }
        throw ConfigError("unknown config key '" + k + "'");
    }
    return extras;
}

} // namespace spde
