// spde: command-line driver for the spectral Galerkin / exponential
// integrator experiments.
//
//   spde convergence --mode temporal|spatial [options]
//   spde path        [options] [--sample S] [--every P] [--grid]
//   spde holder      [options]
//   spde moments     [options]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 I/O error.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spde/config_io.hpp"
#include "spde/error.hpp"
#include "spde/harness.hpp"
#include "spde/integrator.hpp"
#include "spde/manifest.hpp"
#include "spde/report_io.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct CommonOptions {
    std::optional<std::string> config_file;
    std::optional<std::string> model;
    std::optional<std::string> datum;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_ref;
    std::optional<std::size_t> k_ref;
    std::optional<std::size_t> j_modes;
    std::optional<std::string> sweep;
    std::optional<std::string> error_time;
    std::optional<double> p;
    std::optional<double> horizon;
    std::optional<std::size_t> quadrature_factor;
    bool paper_scale = false;
    unsigned threads = spde::default_threads();
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_file, "Flat key = value config file (flags override it)");
    cmd->add_option("--model", o.model, "Model id: paper-ex | heat | linear-additive");
    cmd->add_option("--datum", o.datum, "Initial datum: paper | zero | e<k> | power:<a>");
    cmd->add_option("--samples", o.samples, "Monte Carlo sample count");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--n-ref", o.n_ref, "Reference mode count N_ref");
    cmd->add_option("--k-ref", o.k_ref, "Reference step count K_ref");
    cmd->add_option("--j-modes", o.j_modes, "Noise modes J (defaults to N_ref)");
    cmd->add_option("--sweep", o.sweep, "Resolutions as N:K,N:K,...");
    cmd->add_option("--error-time", o.error_time, "final | sup_over_grid");
    cmd->add_option("--p", o.p, "Moment order p >= 2");
    cmd->add_option("--T", o.horizon, "Time horizon");
    cmd->add_option("--quadrature-factor", o.quadrature_factor, "Quadrature grid M = factor * N");
    cmd->add_flag("--paper-scale", o.paper_scale, "Full-size setting (N_ref = 2^9, K_ref = 2^13, 200 samples)");
    cmd->add_option("--threads", o.threads, "Worker threads (results do not depend on it)");
    cmd->add_option("--out", o.out, "Output directory (env SPDE_OUTDIR overrides the default)");
}

// defaults < config file < flags
spde::ExperimentConfig resolve_config(const CommonOptions& o, spde::ExperimentConfig cfg,
                                      const std::vector<std::string>& extra_keys,
                                      std::map<std::string, std::string>& extras) {
    bool j_given = false;
    if (o.config_file) {
        std::ifstream is(*o.config_file);
        if (!is) throw spde::IoError("cannot open config file " + *o.config_file);
        for (const auto& [k, v] : spde::parse_key_values(is)) {
            if (spde::apply_config_key(cfg, k, v)) {
                j_given = j_given || k == "j_modes";
            } else if (std::find(extra_keys.begin(), extra_keys.end(), k) != extra_keys.end()) {
                extras.emplace(k, v);
            } else {
                throw spde::ConfigError("unknown config key '" + k + "'");
            }
        }
    }
    if (o.model) cfg.model = *o.model;
    if (o.datum) cfg.datum = *o.datum;
    if (o.samples) cfg.samples = *o.samples;
    if (o.seed) cfg.seed = *o.seed;
    if (o.n_ref) cfg.reference.n_modes = *o.n_ref;
    if (o.k_ref) cfg.reference.k_steps = *o.k_ref;
    if (o.j_modes) {
        cfg.noise_modes = *o.j_modes;
        j_given = true;
    }
    if (o.sweep) cfg.sweep = spde::parse_sweep(*o.sweep);
    if (o.error_time) cfg.error_time = spde::parse_error_time(*o.error_time);
    if (o.p) cfg.moment_order = *o.p;
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.quadrature_factor) cfg.quadrature_factor = *o.quadrature_factor;
    if (!j_given) cfg.noise_modes = cfg.reference.n_modes;
    return cfg;
}

fs::path output_dir(const CommonOptions& o, const std::string& default_name) {
    if (o.out) return *o.out;
    if (const char* env = std::getenv("SPDE_OUTDIR"); env && *env) return env;
    return fs::path("runs") / default_name;
}

class Run {
public:
    Run(std::string command, const spde::ExperimentConfig& cfg, spde::json settings, fs::path dir)
        : dir_(std::move(dir)) {
        manifest_.command = std::move(command);
        manifest_.config = cfg;
        manifest_.extra = std::move(settings);
        manifest_.output_dir = dir_.string();
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw spde::IoError("cannot create " + dir_.string() + ": " + ec.message());
        spde::write_json(dir_ / "manifest.json", manifest_.to_json());
    }

    [[nodiscard]] const fs::path& dir() const { return dir_; }

    void finish() {
        manifest_.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::system_clock::now() - manifest_.started).count();
        spde::write_json(dir_ / "manifest.json", manifest_.to_json());
    }

private:
    fs::path dir_;
    spde::RunManifest manifest_;
};

std::string rate_text(const std::optional<spde::RateFit>& fit) {
    return fit ? spde::format_double(fit->slope) : std::string("n/a (errors at round-off level)");
}

int cmd_convergence(const CommonOptions& o, const std::string& mode) {
    spde::SweepAxis axis;
    if (mode == "temporal") axis = spde::SweepAxis::time;
    else if (mode == "spatial") axis = spde::SweepAxis::space;
    else throw spde::ConfigError("--mode must be temporal or spatial");
    std::map<std::string, std::string> extras;
    auto base = o.paper_scale ? spde::paper_scale_config(axis) : spde::desk_config(axis);
    base.sweep.clear();
    auto cfg = resolve_config(o, base, {"mode"}, extras);
    if (extras.count("mode") && extras["mode"] != mode) {
        throw spde::ConfigError("config file mode '" + extras["mode"] + "' conflicts with --mode");
    }
    // Without an explicit sweep, the default one follows the final reference.
    if (cfg.sweep.empty()) cfg.sweep = spde::default_sweep(axis, cfg.reference);
    cfg.validate_sweep(axis);
    const auto model = spde::resolve_model(cfg);

    Run run("convergence", cfg, {{"mode", mode}},
            output_dir(o, "convergence_" + cfg.model + "_" + mode + "_seed" + std::to_string(cfg.seed)));
    const auto report = spde::strong_error(model, cfg, axis, {o.threads});
    spde::write_json(run.dir() / "report.json", spde::to_json(report));
    spde::write_text(run.dir() / (std::string("rates_") + spde::to_string(axis) + ".csv"),
                     spde::rates_csv(report.primary));
    run.finish();

    std::cout << "model " << cfg.model << ", " << mode << " sweep, " << cfg.samples << " samples\n";
    for (const auto& p : report.primary.points) {
        std::cout << "  h = " << spde::format_double(p.h) << "  rms_error = " << spde::format_double(p.rms_error)
                  << "  +/- " << spde::format_double(p.ci_half_width) << '\n';
    }
    std::cout << "fitted_rate (" << spde::to_string(report.primary.time) << "): " << rate_text(report.primary.fit)
              << '\n'
              << "fitted_rate (" << spde::to_string(report.secondary.time)
              << "): " << rate_text(report.secondary.fit) << '\n'
              << "output: " << run.dir().string() << '\n';
    return kOk;
}

int cmd_path(const CommonOptions& o, std::uint64_t sample, std::size_t every, bool grid) {
    std::map<std::string, std::string> extras;
    auto base = o.paper_scale ? spde::paper_scale_config(spde::SweepAxis::time)
                              : spde::desk_config(spde::SweepAxis::time);
    base.sweep.clear();
    auto cfg = resolve_config(o, base, {}, extras);
    cfg.validate();
    if (every == 0) throw spde::ConfigError("--every must be positive");
    const auto model = spde::resolve_model(cfg);
    const auto disc = spde::Discretization::make(cfg.reference.n_modes, cfg.reference.k_steps, cfg.horizon,
                                                 cfg.quadrature_factor);
    const spde::ExponentialIntegrator integ(
        model, disc, spde::make_basis(disc.quadrature_m, std::max(disc.n_modes, cfg.noise_modes)));

    Run run("path", cfg, {{"sample", sample}, {"every", every}, {"grid", grid}},
            output_dir(o, "path_" + cfg.model + "_seed" + std::to_string(cfg.seed) + "_sample" +
                              std::to_string(sample)));
    const auto noise = spde::generate_noise(cfg.noise_modes, disc.k_steps, cfg.horizon, cfg.seed, sample);
    const auto traj = integ.simulate(model.initial_state(disc.n_modes), noise, spde::SnapshotPolicy::every(every));

    std::vector<std::vector<double>> coeff_rows;
    for (const auto& s : traj.states) coeff_rows.emplace_back(s.coeffs().begin(), s.coeffs().end());
    spde::write_text(run.dir() / "path_coeffs.csv", spde::trajectory_csv(traj, "c_", coeff_rows));
    if (grid) {
        std::vector<std::vector<double>> grid_rows;
        for (const auto& s : traj.states) {
            const auto v = spde::synthesize(s, integ.basis()).values.values();
            grid_rows.emplace_back(v.begin(), v.end());
        }
        spde::write_text(run.dir() / "path_grid.csv", spde::trajectory_csv(traj, "x_", grid_rows));
    }
    const auto& last = traj.states.back();
    spde::write_json(run.dir() / "report.json",
                     {{"kind", "path"},
                      {"model", model.id},
                      {"snapshots", traj.states.size()},
                      {"final_time", traj.times.back()},
                      {"final_l2_norm", last.norm()}});
    run.finish();
    std::cout << "path: " << traj.states.size() << " snapshots, final |X| = " << spde::format_double(last.norm())
              << "\noutput: " << run.dir().string() << '\n';
    return kOk;
}

int cmd_holder(const CommonOptions& o) {
    std::map<std::string, std::string> extras;
    auto base = o.paper_scale ? spde::paper_scale_config(spde::SweepAxis::time)
                              : spde::desk_config(spde::SweepAxis::time);
    base.sweep.clear();
    auto cfg = resolve_config(o, base, {}, extras);
    cfg.validate();
    const auto model = spde::resolve_model(cfg);
    Run run("holder", cfg, spde::json::object(),
            output_dir(o, "holder_" + cfg.model + "_seed" + std::to_string(cfg.seed)));
    const auto report = spde::holder_estimate(model, cfg, {o.threads});
    spde::write_json(run.dir() / "report.json", spde::to_json(report));
    spde::write_text(run.dir() / "holder.csv", spde::holder_csv(report));
    run.finish();
    std::cout << "holder exponent: "
              << (report.degenerate ? std::string("n/a (degenerate: structure function vanishes)")
                                    : spde::format_double(*report.gamma_hat()))
              << "\noutput: " << run.dir().string() << '\n';
    return kOk;
}

int cmd_moments(const CommonOptions& o) {
    std::map<std::string, std::string> extras;
    auto base = o.paper_scale ? spde::paper_scale_config(spde::SweepAxis::space)
                              : spde::desk_config(spde::SweepAxis::space);
    base.sweep.clear();
    auto cfg = resolve_config(o, base, {}, extras);
    // Without an explicit sweep: N = 16 (or N_ref if smaller), doubling up to N_ref, at K_ref.
    if (cfg.sweep.empty()) {
        for (std::size_t n = std::min<std::size_t>(16, cfg.reference.n_modes); n <= cfg.reference.n_modes; n *= 2) {
            cfg.sweep.push_back({n, cfg.reference.k_steps});
        }
    }
    cfg.validate();
    const auto model = spde::resolve_model(cfg);
    Run run("moments", cfg, spde::json::object(),
            output_dir(o, "moments_" + cfg.model + "_seed" + std::to_string(cfg.seed)));
    const auto report = spde::moment_check(model, cfg, {o.threads});
    spde::write_json(run.dir() / "report.json", spde::to_json(report));
    spde::write_text(run.dir() / "moments.csv", spde::moments_csv(report));
    run.finish();
    for (const auto& p : report.points) {
        std::cout << "  N = " << p.n_modes << "  sup_k moment = " << spde::format_double(p.sup_moment)
                  << "  |P_N X0| = " << spde::format_double(p.initial_norm) << '\n';
    }
    std::cout << "growth flag: " << (report.growth_flag ? "yes" : "no") << "\noutput: " << run.dir().string()
              << '\n';
    return kOk;
}

int fail(int code, const char* kind, const std::string& message) {
    std::cerr << spde::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral Galerkin exponential-integrator experiments for SPDEs on (0,1)"};
    app.require_subcommand(1);

    CommonOptions conv_opts, path_opts, holder_opts, moment_opts;
    std::string mode;
    auto* conv = app.add_subcommand("convergence", "Strong convergence rate in time or space");
    add_common(conv, conv_opts);
    conv->add_option("--mode", mode, "temporal | spatial")->required();

    std::uint64_t sample = 0;
    std::size_t every = 1;
    bool grid = false;
    auto* path = app.add_subcommand("path", "Simulate one path and dump snapshots");
    add_common(path, path_opts);
    path->add_option("--sample", sample, "Sample index selecting the noise stream");
    path->add_option("--every", every, "Snapshot every p steps");
    path->add_flag("--grid", grid, "Also write grid values");

    auto* holder = app.add_subcommand("holder", "Hoelder exponent from the time structure function");
    add_common(holder, holder_opts);
    auto* moments = app.add_subcommand("moments", "Sup-in-time moment bounds across mode counts");
    add_common(moments, moment_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kConfig, "config", e.what());
    }

    try {
        if (conv->parsed()) return cmd_convergence(conv_opts, mode);
        if (path->parsed()) return cmd_path(path_opts, sample, every, grid);
        if (holder->parsed()) return cmd_holder(holder_opts);
        if (moments->parsed()) return cmd_moments(moment_opts);
    } catch (const spde::ConfigError& e) {
        return fail(kConfig, "config", e.what());
    } catch (const spde::NumericalError& e) {
        return fail(kNumerical, "numerical", e.what());
    } catch (const spde::IoError& e) {
        return fail(kIo, "io", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(kIo, "io", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kConfig, "config", e.what());
    } catch (const std::exception& e) {
        return fail(1, "internal", e.what());
    }
    return kOk;
}
