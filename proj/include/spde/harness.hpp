#pragma once

// Coupled-noise Monte Carlo estimation of strong errors, Hoelder exponents and
// moment bounds for the exponential integrator.
//
// Every sample draws one fine noise lattice (J modes x K_ref steps). Each
// resolution (N, K) in a sweep consumes a deterministic function of that
// lattice: time-coarsened by K_ref / K and, for N below the reference,
// truncated to N modes. Errors are measured against the reference run
// (N_ref, K_ref) on the same lattice.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spde/error.hpp"
#include "spde/integrator.hpp"
#include "spde/nemytskii.hpp"
#include "spde/noise.hpp"
#include "spde/spectral.hpp"

namespace spde {

enum class SweepAxis { time, space };
enum class ErrorTime { final_time, sup_over_grid };

[[nodiscard]] inline const char* to_string(SweepAxis a) noexcept {
    return a == SweepAxis::time ? "temporal" : "spatial";
}
[[nodiscard]] inline const char* to_string(ErrorTime t) noexcept {
    return t == ErrorTime::final_time ? "final" : "sup_over_grid";
}

struct Resolution {
    std::size_t n_modes = 0;
    std::size_t k_steps = 0;
    friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct ExperimentConfig {
    std::string model = "paper-ex";
    std::string datum = "paper";
    double horizon = 1.0;
    Resolution reference{256, 4096};
    std::vector<Resolution> sweep;
    std::size_t noise_modes = 256;
    std::size_t samples = 100;
    double moment_order = 2.0;
    std::uint64_t seed = 0;
    ErrorTime error_time = ErrorTime::final_time;
    std::size_t quadrature_factor = 2;
    // Hoelder lags 2^-finest .. 2^-coarsest.
    int holder_finest_lag_exp = 10;
    int holder_coarsest_lag_exp = 4;

    [[nodiscard]] std::size_t reference_quadrature() const noexcept {
        return quadrature_factor * reference.n_modes;
    }

    /// Noise modes seen by a run with n modes: the full J at the reference
    /// size, otherwise the first n.
    [[nodiscard]] std::size_t noise_modes_for(std::size_t n_modes) const noexcept {
        return n_modes >= reference.n_modes ? noise_modes : std::min(n_modes, noise_modes);
    }

    /// Checks the invariants shared by every experiment.
    void validate() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("T must be positive");
        if (reference.n_modes == 0 || reference.k_steps == 0) {
            throw ConfigError("reference resolution must be positive");
        }
        if (quadrature_factor == 0) throw ConfigError("quadrature_factor must be positive");
        if (samples < 2) throw ConfigError("samples must be at least 2");
        if (!(moment_order >= 2.0) || !std::isfinite(moment_order)) throw ConfigError("p must be >= 2");
        if (noise_modes < reference.n_modes) throw ConfigError("j_modes must be >= n_ref");
        if (noise_modes > reference_quadrature()) {
            throw ConfigError("j_modes must not exceed the reference quadrature size M_ref");
        }
        for (const auto& r : sweep) {
            if (r.n_modes == 0 || r.k_steps == 0) throw ConfigError("sweep resolutions must be positive");
            if (r.n_modes > reference.n_modes) throw ConfigError("sweep N must be <= n_ref");
            if (reference.k_steps % r.k_steps != 0) throw ConfigError("sweep K must divide k_ref");
        }
    }

    /// Additional invariants for a convergence sweep along `axis`.
    void validate_sweep(SweepAxis axis) const {
        validate();
        if (sweep.size() < 2) throw ConfigError("a convergence sweep needs at least two resolutions");
        for (const auto& r : sweep) {
            if (axis == SweepAxis::time && r.n_modes != reference.n_modes) {
                throw ConfigError("temporal sweep must keep N = n_ref");
            }
            if (axis == SweepAxis::space && r.k_steps != reference.k_steps) {
                throw ConfigError("spatial sweep must keep K = k_ref");
            }
        }
    }

    /// Lag lengths in reference steps; each lag must be a whole number of steps.
    [[nodiscard]] std::vector<std::size_t> holder_lag_steps() const {
        if (holder_finest_lag_exp < holder_coarsest_lag_exp) {
            throw ConfigError("holder lags: finest exponent must be >= coarsest exponent");
        }
        std::vector<std::size_t> lags;
        for (int e = holder_finest_lag_exp; e >= holder_coarsest_lag_exp; --e) {
            const double steps = std::ldexp(1.0, -e) * static_cast<double>(reference.k_steps) / horizon;
            const double rounded = std::round(steps);
            if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * steps) {
                throw ConfigError("holder lag 2^-" + std::to_string(e) + " is not a multiple of tau_ref");
            }
            lags.push_back(static_cast<std::size_t>(rounded));
        }
        if (lags.back() > reference.k_steps) throw ConfigError("holder lag exceeds the horizon");
        return lags;
    }
};

/// Four dyadic resolutions below the reference: K_ref/64 .. K_ref/8 in time,
/// N_ref/32 .. N_ref/4 in space (values below 1 are dropped).
[[nodiscard]] inline std::vector<Resolution> default_sweep(SweepAxis axis, Resolution ref) {
    std::vector<Resolution> out;
    for (std::size_t d : {64u, 32u, 16u, 8u}) {
        if (axis == SweepAxis::time) {
            if (ref.k_steps / d >= 1) out.push_back({ref.n_modes, ref.k_steps / d});
        } else {
            if (ref.n_modes / (d / 2) >= 1) out.push_back({ref.n_modes / (d / 2), ref.k_steps});
        }
    }
    return out;
}

/// Desk-scale defaults: N_ref = 2^8, K_ref = 2^12, J = 2^8, 100 samples.
[[nodiscard]] inline ExperimentConfig desk_config(SweepAxis axis) {
    ExperimentConfig c;
    c.reference = {256, 4096};
    c.noise_modes = 256;
    c.samples = 100;
    c.sweep = default_sweep(axis, c.reference);
    return c;
}

/// The rate experiments at full size: N_ref = 2^9, K_ref = 2^13, J = 2^9,
/// 200 samples; tau = 2^-7..2^-10 or N = 2^4..2^7.
[[nodiscard]] inline ExperimentConfig paper_scale_config(SweepAxis axis) {
    ExperimentConfig c;
    c.reference = {512, 8192};
    c.noise_modes = 512;
    c.samples = 200;
    c.sweep = default_sweep(axis, c.reference);
    return c;
}

/// Model with the configured initial datum.
[[nodiscard]] inline ModelSpec resolve_model(const ExperimentConfig& cfg) {
    ModelSpec m = builtin_model(cfg.model);
    if (!cfg.datum.empty()) m.initial_coeff = datum::parse(cfg.datum);
    m.horizon = cfg.horizon;
    return m;
}

// Statistics -------------------------------------------------------------------

/// Running mean and variance (Welford).
class Welford {
public:
    void add(double x) noexcept {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    [[nodiscard]] std::size_t count() const noexcept { return n_; }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    [[nodiscard]] double variance() const noexcept {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline constexpr double z_975 = 1.959963984540054;

struct MomentEstimate {
    double value = 0.0;          // (E[e^p])^(1/p)
    double ci_half_width = 0.0;  // delta method through x -> x^(1/p)
};

/// Turns accumulated e^p samples into (mean)^(1/p) with a 95% half-width.
[[nodiscard]] inline MomentEstimate moment_estimate(const Welford& acc, double p) {
    const double m = std::max(acc.mean(), 0.0);
    const double hw_mean = z_975 * std::sqrt(acc.variance() / static_cast<double>(acc.count()));
    MomentEstimate out;
    out.value = std::pow(m, 1.0 / p);
    out.ci_half_width = m > 0.0 ? hw_mean * std::pow(m, 1.0 / p - 1.0) / p : 0.0;
    return out;
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // RMS deviation in log coordinates
};

/// Least-squares slope of log(err) against log(h).
[[nodiscard]] inline RateFit fit_rate(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("fit_rate: need at least two points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [h, e] : points) {
        if (!(h > 0.0) || !(e > 0.0) || !std::isfinite(h) || !std::isfinite(e)) {
            throw std::invalid_argument("fit_rate: resolutions and errors must be positive");
        }
        sx += std::log(h);
        sy += std::log(e);
    }
    const auto n = static_cast<double>(points.size());
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [h, e] : points) {
        const double dx = std::log(h) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: resolutions must not all coincide");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (const auto& [h, e] : points) {
        const double r = std::log(e) - (fit.intercept + fit.slope * std::log(h));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

// Sample-level parallelism ----------------------------------------------------

/// Evaluates fn(s) for s = 0..n-1 on up to `threads` workers and returns the
/// results in sample order. The first exception (by sample index) is rethrown.
template <class Fn>
[[nodiscard]] auto parallel_samples(std::size_t n, unsigned threads, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
    using Result = decltype(fn(std::size_t{}));
    std::vector<std::optional<Result>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t s = next++; s < n; s = next++) {
            try {
                slots[s].emplace(fn(s));
            } catch (...) {
                errors[s] = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<Result> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

[[nodiscard]] inline unsigned default_threads() noexcept {
    return std::max(1u, std::thread::hardware_concurrency());
}

// Strong errors ----------------------------------------------------------------

struct ErrorPoint {
    double h = 0.0;
    std::size_t n_modes = 0;
    std::size_t k_steps = 0;
    double rms_error = 0.0;
    double ci_half_width = 0.0;
};

struct ErrorSeries {
    ErrorTime time = ErrorTime::final_time;
    std::vector<ErrorPoint> points; // sorted by h
    std::optional<RateFit> fit;     // empty when the errors are at round-off level
};

struct ErrorReport {
    SweepAxis axis = SweepAxis::time;
    ExperimentConfig config;
    std::string model_id;
    ErrorSeries primary;   // config.error_time
    ErrorSeries secondary; // the other error time
    std::size_t samples = 0;

    [[nodiscard]] std::optional<double> fitted_rate() const {
        return primary.fit ? std::optional<double>(primary.fit->slope) : std::nullopt;
    }
};

namespace detail {

inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
    const std::size_t n = std::max(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (i < a.size() ? a[i] : 0.0) - (i < b.size() ? b[i] : 0.0);
        s += x * x;
    }
    return std::sqrt(s);
}

// Errors below this (relative to the initial datum) are treated as exact.
inline constexpr double kRoundoffLevel = 1e-12;

inline std::optional<RateFit> fit_if_meaningful(const std::vector<ErrorPoint>& pts, double scale) {
    const double floor = kRoundoffLevel * std::max(1.0, scale);
    for (const auto& p : pts) {
        if (!(p.rms_error > floor)) return std::nullopt;
    }
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : pts) xy.emplace_back(p.h, p.rms_error);
    return fit_rate(xy);
}

// errors[i][k]: distance to the reference at grid time k of sweep entry i.
struct SweepSample {
    std::vector<std::vector<double>> errors;
};

// Integrators for each resolution, sharing one basis per quadrature size.
struct SweepPlan {
    ExponentialIntegrator reference;
    std::vector<ExponentialIntegrator> runs;
    std::size_t ref_stride;
};

inline SweepPlan make_plan(const ModelSpec& model, const ExperimentConfig& cfg) {
    const std::size_t q = cfg.quadrature_factor;
    const auto ref_disc = Discretization::make(cfg.reference.n_modes, cfg.reference.k_steps, cfg.horizon, q);
    auto ref_basis = make_basis(ref_disc.quadrature_m, std::max(cfg.reference.n_modes, cfg.noise_modes));
    ExponentialIntegrator reference(model, ref_disc, ref_basis);
    std::vector<ExponentialIntegrator> runs;
    std::size_t stride = 0;
    for (const auto& r : cfg.sweep) {
        const auto disc = Discretization::make(r.n_modes, r.k_steps, cfg.horizon, q);
        auto basis = disc.quadrature_m == ref_disc.quadrature_m
                         ? ref_basis
                         : make_basis(disc.quadrature_m, std::max(r.n_modes, cfg.noise_modes_for(r.n_modes)));
        runs.emplace_back(model, disc, basis);
        stride = std::gcd(stride, cfg.reference.k_steps / r.k_steps);
    }
    return SweepPlan{std::move(reference), std::move(runs), std::max<std::size_t>(stride, 1)};
}

inline NoiseLattice noise_for(const NoiseLattice& fine, const ExperimentConfig& cfg, Resolution r) {
    const std::size_t modes = cfg.noise_modes_for(r.n_modes);
    NoiseLattice view = modes < fine.modes() ? fine.truncate_modes(modes) : fine;
    const std::size_t factor = cfg.reference.k_steps / r.k_steps;
    return factor == 1 ? view : coarsen_time(view, factor);
}

inline SweepSample run_sweep_sample(const SweepPlan& plan, const ModelSpec& model,
                                    const ExperimentConfig& cfg, std::size_t s) {
    const auto lattice =
        generate_noise(cfg.noise_modes, cfg.reference.k_steps, cfg.horizon, cfg.seed, s);

    // Reference states at multiples of the common stride of all sweep grids.
    std::vector<std::vector<double>> ref_states;
    ref_states.reserve(cfg.reference.k_steps / plan.ref_stride + 1);
    plan.reference.run(model.initial_state(cfg.reference.n_modes), lattice,
                       [&](std::size_t k, std::span<const double> c) {
                           if (k % plan.ref_stride == 0) ref_states.emplace_back(c.begin(), c.end());
                       });

    SweepSample out;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const Resolution r = cfg.sweep[i];
        const std::size_t ratio = cfg.reference.k_steps / r.k_steps / plan.ref_stride;
        std::vector<double> path(r.k_steps + 1, 0.0);
        plan.runs[i].run(model.initial_state(r.n_modes), noise_for(lattice, cfg, r),
                         [&](std::size_t k, std::span<const double> c) {
                             path[k] = distance(ref_states[k * ratio], c);
                         });
        out.errors.push_back(std::move(path));
    }
    return out;
}

inline ErrorSeries summarize(const std::vector<SweepSample>& samples, const ExperimentConfig& cfg,
                             SweepAxis axis, ErrorTime time, double scale) {
    ErrorSeries series;
    series.time = time;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const Resolution r = cfg.sweep[i];
        // Moment at grid time k; the sup variant maximizes over k after averaging.
        const auto at = [&](std::size_t k) {
            Welford acc;
            for (const auto& s : samples) acc.add(std::pow(s.errors[i][k], cfg.moment_order));
            return moment_estimate(acc, cfg.moment_order);
        };
        auto est = at(r.k_steps);
        if (time == ErrorTime::sup_over_grid) {
            for (std::size_t k = 0; k < r.k_steps; ++k) {
                const auto e = at(k);
                if (e.value > est.value) est = e;
            }
        }
        const double h = axis == SweepAxis::time ? cfg.horizon / static_cast<double>(r.k_steps)
                                                 : 1.0 / static_cast<double>(r.n_modes);
        series.points.push_back({h, r.n_modes, r.k_steps, est.value, est.ci_half_width});
    }
    std::sort(series.points.begin(), series.points.end(),
              [](const ErrorPoint& a, const ErrorPoint& b) { return a.h < b.h; });
    series.fit = fit_if_meaningful(series.points, scale);
    return series;
}

} // namespace detail

struct RunOptions {
    unsigned threads = default_threads();
};

/// Strong error against the reference along one axis; errors are
/// (mean_s |X_ref - X_run|^p)^(1/p) at the final time and as the sup of that
/// moment over the run's time grid.
[[nodiscard]] inline ErrorReport strong_error(const ModelSpec& model, const ExperimentConfig& cfg,
                                              SweepAxis axis, RunOptions opts = {}) {
    cfg.validate_sweep(axis);
    ModelSpec m = model;
    m.horizon = cfg.horizon;
    m.validate();
    const auto plan = detail::make_plan(m, cfg);
    const auto samples = parallel_samples(cfg.samples, opts.threads, [&](std::size_t s) {
        return detail::run_sweep_sample(plan, m, cfg, s);
    });
    const double scale = m.initial_state(cfg.reference.n_modes).norm();
    const ErrorTime other =
        cfg.error_time == ErrorTime::final_time ? ErrorTime::sup_over_grid : ErrorTime::final_time;
    ErrorReport report;
    report.axis = axis;
    report.config = cfg;
    report.model_id = m.id;
    report.samples = cfg.samples;
    report.primary = detail::summarize(samples, cfg, axis, cfg.error_time, scale);
    report.secondary = detail::summarize(samples, cfg, axis, other, scale);
    return report;
}

/// Temporal sweep: K varies at N = N_ref; rate fitted against tau.
[[nodiscard]] inline ErrorReport strong_error_temporal(const ModelSpec& model, const ExperimentConfig& cfg,
                                                       RunOptions opts = {}) {
    return strong_error(model, cfg, SweepAxis::time, opts);
}

/// Spatial sweep: N varies at K = K_ref; rate fitted against 1/N.
[[nodiscard]] inline ErrorReport strong_error_spatial(const ModelSpec& model, const ExperimentConfig& cfg,
                                                      RunOptions opts = {}) {
    return strong_error(model, cfg, SweepAxis::space, opts);
}

[[nodiscard]] inline ErrorReport strong_error_temporal(const ExperimentConfig& cfg, RunOptions opts = {}) {
    return strong_error(resolve_model(cfg), cfg, SweepAxis::time, opts);
}

[[nodiscard]] inline ErrorReport strong_error_spatial(const ExperimentConfig& cfg, RunOptions opts = {}) {
    return strong_error(resolve_model(cfg), cfg, SweepAxis::space, opts);
}

// Hoelder regularity -----------------------------------------------------------

struct HolderReport {
    ExperimentConfig config;
    std::string model_id;
    std::vector<ErrorPoint> points; // h = lag, rms_error = structure function
    std::size_t anchors = 0;
    bool degenerate = false;
    std::optional<RateFit> fit;

    [[nodiscard]] std::optional<double> gamma_hat() const {
        return fit ? std::optional<double>(fit->slope) : std::nullopt;
    }
};

/// Structure function (E |X(s + l) - X(s)|^2)^(1/2), averaged over anchors
/// s = 0, l_max, 2 l_max, ... with s + l_max <= T, at the reference
/// resolution, for dyadic lags l. The fitted log-log slope estimates the
/// Hoelder exponent in time.
[[nodiscard]] inline HolderReport holder_estimate(const ModelSpec& model, const ExperimentConfig& cfg,
                                                  RunOptions opts = {}) {
    cfg.validate();
    ModelSpec m = model;
    m.horizon = cfg.horizon;
    m.validate();
    const auto lags = cfg.holder_lag_steps();
    const std::size_t stride = lags.front();
    const std::size_t longest = lags.back();
    const std::size_t anchors = cfg.reference.k_steps / longest;

    const auto disc = Discretization::make(cfg.reference.n_modes, cfg.reference.k_steps, cfg.horizon,
                                           cfg.quadrature_factor);
    const ExponentialIntegrator integ(
        m, disc, make_basis(disc.quadrature_m, std::max(cfg.reference.n_modes, cfg.noise_modes)));

    const auto per_sample = parallel_samples(cfg.samples, opts.threads, [&](std::size_t s) {
        const auto lattice = generate_noise(cfg.noise_modes, cfg.reference.k_steps, cfg.horizon, cfg.seed, s);
        std::vector<std::vector<double>> snaps;
        snaps.reserve(cfg.reference.k_steps / stride + 1);
        integ.run(m.initial_state(cfg.reference.n_modes), lattice, [&](std::size_t k, std::span<const double> c) {
            if (k % stride == 0) snaps.emplace_back(c.begin(), c.end());
        });
        std::vector<double> sq(lags.size(), 0.0);
        for (std::size_t l = 0; l < lags.size(); ++l) {
            for (std::size_t a = 0; a < anchors; ++a) {
                const std::size_t s0 = a * longest / stride;
                const double d = detail::distance(snaps[s0 + lags[l] / stride], snaps[s0]);
                sq[l] += d * d;
            }
            sq[l] /= static_cast<double>(anchors);
        }
        return sq;
    });

    HolderReport report;
    report.config = cfg;
    report.model_id = m.id;
    report.anchors = anchors;
    for (std::size_t l = 0; l < lags.size(); ++l) {
        Welford acc;
        for (const auto& s : per_sample) acc.add(s[l]);
        const auto est = moment_estimate(acc, 2.0);
        const double lag = static_cast<double>(lags[l]) * disc.tau();
        report.points.push_back({lag, disc.n_modes, disc.k_steps, est.value, est.ci_half_width});
    }
    report.fit = detail::fit_if_meaningful(report.points, 1.0);
    report.degenerate = !report.fit.has_value();
    return report;
}

[[nodiscard]] inline HolderReport holder_estimate(const ExperimentConfig& cfg, RunOptions opts = {}) {
    return holder_estimate(resolve_model(cfg), cfg, opts);
}

// Moment bounds ----------------------------------------------------------------

struct MomentPoint {
    std::size_t n_modes = 0;
    std::size_t k_steps = 0;
    double sup_moment = 0.0;     // sup_k (E |X_k|^p)^(1/p)
    double sup_time = 0.0;       // where the sup is attained
    double ci_half_width = 0.0;  // at the sup
    double initial_norm = 0.0;   // |P_N X_0|
    bool monotone_decay = false; // moment curve non-increasing in k
    std::vector<double> curve;   // (E |X_k|^p)^(1/p), k = 0..K
    std::vector<double> curve_ci;
};

struct MomentReport {
    ExperimentConfig config;
    std::string model_id;
    std::vector<MomentPoint> points;
    bool growth_flag = false; // sup moment at the largest N exceeds twice that at the smallest
};

/// Runs every sweep resolution on coupled noise and reports sup over the grid
/// of the p-th moment of the L2 norm.
[[nodiscard]] inline MomentReport moment_check(const ModelSpec& model, const ExperimentConfig& cfg,
                                               RunOptions opts = {}) {
    cfg.validate();
    if (cfg.sweep.empty()) throw ConfigError("moment check needs at least one sweep resolution");
    ModelSpec m = model;
    m.horizon = cfg.horizon;
    m.validate();
    const double p = cfg.moment_order;

    std::vector<ExponentialIntegrator> runs;
    for (const auto& r : cfg.sweep) {
        const auto disc = Discretization::make(r.n_modes, r.k_steps, cfg.horizon, cfg.quadrature_factor);
        runs.emplace_back(m, disc, make_basis(disc.quadrature_m, std::max(r.n_modes, cfg.noise_modes_for(r.n_modes))));
    }

    const auto per_sample = parallel_samples(cfg.samples, opts.threads, [&](std::size_t s) {
        const auto lattice = generate_noise(cfg.noise_modes, cfg.reference.k_steps, cfg.horizon, cfg.seed, s);
        std::vector<std::vector<double>> norms;
        for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
            const Resolution r = cfg.sweep[i];
            std::vector<double> curve;
            curve.reserve(r.k_steps + 1);
            runs[i].run(m.initial_state(r.n_modes), detail::noise_for(lattice, cfg, r),
                        [&](std::size_t, std::span<const double> c) {
                            double sq = 0.0;
                            for (double x : c) sq += x * x;
                            curve.push_back(std::pow(std::sqrt(sq), p));
                        });
            norms.push_back(std::move(curve));
        }
        return norms;
    });

    MomentReport report;
    report.config = cfg;
    report.model_id = m.id;
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const Resolution r = cfg.sweep[i];
        MomentPoint pt;
        pt.n_modes = r.n_modes;
        pt.k_steps = r.k_steps;
        pt.initial_norm = m.initial_state(r.n_modes).norm();
        pt.monotone_decay = true;
        for (std::size_t k = 0; k <= r.k_steps; ++k) {
            Welford acc;
            for (const auto& s : per_sample) acc.add(s[i][k]);
            const auto est = moment_estimate(acc, p);
            if (k > 0 && est.value > pt.curve.back()) pt.monotone_decay = false;
            pt.curve.push_back(est.value);
            pt.curve_ci.push_back(est.ci_half_width);
            if (k == 0 || est.value > pt.sup_moment) {
                pt.sup_moment = est.value;
                pt.sup_time = cfg.horizon * static_cast<double>(k) / static_cast<double>(r.k_steps);
                pt.ci_half_width = est.ci_half_width;
            }
        }
        report.points.push_back(std::move(pt));
    }
    const auto [lo, hi] = std::minmax_element(report.points.begin(), report.points.end(),
                                              [](const MomentPoint& a, const MomentPoint& b) {
                                                  return a.n_modes < b.n_modes;
                                              });
    report.growth_flag = hi->sup_moment > 2.0 * lo->sup_moment;
    return report;
}

[[nodiscard]] inline MomentReport moment_check(const ExperimentConfig& cfg, RunOptions opts = {}) {
    return moment_check(resolve_model(cfg), cfg, opts);
}

} // namespace spde
