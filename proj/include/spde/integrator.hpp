#pragma once

// Explicit exponential integrator for the spectral Galerkin system:
//
//   X_k = S(tau) [ X_{k-1} + tau F_N(X_{k-1}) + G_N(X_{k-1}) dW_k ],
//
// which is the three-term form S X + tau S F + S G dW by linearity of S(tau).

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spde/error.hpp"
#include "spde/nemytskii.hpp"
#include "spde/noise.hpp"
#include "spde/spectral.hpp"

namespace spde {

struct Discretization {
    std::size_t n_modes = 0;
    std::size_t k_steps = 0;
    std::size_t quadrature_m = 0;
    double horizon = 1.0;

    /// Quadrature grid M = factor * N.
    [[nodiscard]] static Discretization make(std::size_t n_modes, std::size_t k_steps, double horizon,
                                             std::size_t quadrature_factor = 2) {
        Discretization d{n_modes, k_steps, quadrature_factor * n_modes, horizon};
        d.validate();
        return d;
    }

    [[nodiscard]] double tau() const noexcept { return horizon / static_cast<double>(k_steps); }
    [[nodiscard]] double time(std::size_t k) const noexcept {
        return static_cast<double>(k) * horizon / static_cast<double>(k_steps);
    }

    void validate() const {
        if (n_modes == 0 || k_steps == 0) {
            throw std::invalid_argument("Discretization: N and K must be positive");
        }
        if (quadrature_m < n_modes) throw std::invalid_argument("Discretization: M must be >= N");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw std::invalid_argument("Discretization: horizon must be positive");
        }
    }
};

/// Which grid points simulate records.
struct SnapshotPolicy {
    enum class Kind { final_only, all, every };
    Kind kind = Kind::final_only;
    std::size_t stride = 1;

    [[nodiscard]] static SnapshotPolicy final_only() { return {Kind::final_only, 1}; }
    [[nodiscard]] static SnapshotPolicy all() { return {Kind::all, 1}; }
    /// Every p-th step plus the initial and final points.
    [[nodiscard]] static SnapshotPolicy every(std::size_t p) {
        if (p == 0) throw std::invalid_argument("SnapshotPolicy: stride must be positive");
        return {Kind::every, p};
    }

    [[nodiscard]] bool records(std::size_t k, std::size_t k_steps) const noexcept {
        switch (kind) {
        case Kind::final_only: return k == k_steps;
        case Kind::all: return true;
        case Kind::every: return k % stride == 0 || k == k_steps;
        }
        return false;
    }
};

struct Trajectory {
    std::vector<std::size_t> steps;
    std::vector<double> times;
    std::vector<SpectralState> states;
};

/// Exponential integrator bound to one model and discretization. Immutable
/// and shareable across threads; the per-mode factors exp(-lambda_j tau) and
/// transform tables are computed once at construction.
class ExponentialIntegrator {
public:
    ExponentialIntegrator(ModelSpec model, Discretization disc,
                          std::shared_ptr<const SineBasis> basis = nullptr)
        : model_(std::move(model)), disc_(disc), basis_(std::move(basis)) {
        model_.validate();
        disc_.validate();
        if (!basis_) basis_ = make_basis(disc_.quadrature_m, disc_.n_modes);
        if (basis_->m_points() != disc_.quadrature_m) {
            throw std::invalid_argument("ExponentialIntegrator: basis grid does not match M");
        }
        detail::require_rows(*basis_, disc_.n_modes, "ExponentialIntegrator");
        factors_ = semigroup_factors(disc_.n_modes, disc_.tau());
        if (model_.flux) {
            (void)basis_->moment_column(1);
        }
    }

    [[nodiscard]] const ModelSpec& model() const noexcept { return model_; }
    [[nodiscard]] const Discretization& discretization() const noexcept { return disc_; }
    [[nodiscard]] const SineBasis& basis() const noexcept { return *basis_; }
    [[nodiscard]] std::shared_ptr<const SineBasis> shared_basis() const noexcept { return basis_; }

    /// One step driven by spectral increments dW_j, j = 1..J (J <= basis rows,
    /// J <= M).
    [[nodiscard]] SpectralState step(const SpectralState& state, std::span<const double> increments) const {
        Workspace ws;
        std::vector<double> out(disc_.n_modes);
        step_into(state.coeffs(), increments, out, ws);
        return SpectralState(std::move(out));
    }

    /// One step in the composed form S(tau)(X + tau drift_apply(X) +
    /// diffusion_apply(X, noise_field)). Same map as the increment overload.
    [[nodiscard]] SpectralState step(const SpectralState& state, const GridField& noise_field) const {
        check_state(state);
        const auto drift = drift_apply(state, model_, *basis_);
        const auto diff = diffusion_apply(state, model_, noise_field, *basis_);
        std::vector<double> y(state.coeffs().begin(), state.coeffs().end());
        const double tau = disc_.tau();
        for (std::size_t j = 0; j < y.size(); ++j) {
            y[j] = factors_[j] * (y[j] + tau * drift.coeffs()[j] + diff.coeffs()[j]);
        }
        return finite_state(std::move(y));
    }

    /// Runs K steps from `initial`, calling observer(k, coeffs) for k = 0..K.
    /// The noise must have exactly K steps of size tau.
    template <class Observer>
    SpectralState run(const SpectralState& initial, const NoiseLattice& noise, Observer&& observer) const {
        check_state(initial);
        check_noise(noise);
        Workspace ws;
        std::vector<double> current(initial.coeffs().begin(), initial.coeffs().end());
        std::vector<double> next(current.size());
        std::vector<double> dw(noise.modes());
        observer(std::size_t{0}, std::span<const double>(current));
        for (std::size_t k = 1; k <= disc_.k_steps; ++k) {
            noise.column(k, dw);
            step_into(current, dw, next, ws);
            current.swap(next);
            observer(k, std::span<const double>(current));
        }
        return SpectralState(std::move(current));
    }

    [[nodiscard]] Trajectory simulate(const SpectralState& initial, const NoiseLattice& noise,
                                      SnapshotPolicy policy = SnapshotPolicy::final_only()) const {
        Trajectory traj;
        run(initial, noise, [&](std::size_t k, std::span<const double> c) {
            if (policy.records(k, disc_.k_steps)) {
                traj.steps.push_back(k);
                traj.times.push_back(disc_.time(k));
                traj.states.emplace_back(std::vector<double>(c.begin(), c.end()));
            }
        });
        return traj;
    }

private:
    struct Workspace {
        std::vector<double> x;
        std::vector<double> w;
        std::vector<double> u;
        std::vector<double> r;
        std::vector<double> a;
    };

    void check_state(const SpectralState& s) const {
        if (s.n_modes() != disc_.n_modes) {
            throw std::invalid_argument("ExponentialIntegrator: state has " + std::to_string(s.n_modes()) +
                                        " modes, discretization expects " +
                                        std::to_string(disc_.n_modes));
        }
    }

    void check_noise(const NoiseLattice& noise) const {
        if (noise.steps() != disc_.k_steps) {
            throw std::invalid_argument("ExponentialIntegrator: noise has " + std::to_string(noise.steps()) +
                                        " steps, discretization expects " +
                                        std::to_string(disc_.k_steps));
        }
        if (std::abs(noise.horizon() - disc_.horizon) > 1e-12 * disc_.horizon) {
            throw std::invalid_argument("ExponentialIntegrator: noise horizon mismatch");
        }
        if (noise.modes() < disc_.n_modes) {
            throw std::invalid_argument("ExponentialIntegrator: noise has fewer modes than the state");
        }
        check_noise_modes(noise.modes());
    }

    void check_noise_modes(std::size_t j) const {
        if (j > basis_->m_points()) {
            throw std::invalid_argument("ExponentialIntegrator: more noise modes than grid points");
        }
        detail::require_rows(*basis_, j, "ExponentialIntegrator noise");
    }

    static SpectralState finite_state(std::vector<double> c) {
        if (!detail::all_finite(c)) throw NumericalError("non-finite state in exponential integrator");
        return SpectralState(std::move(c));
    }

    // Fused step: one synthesis of X and of dW, then a single analysis of
    // tau f~(X) + g(X) dW and a single moment pass for the gradient term.
    void step_into(std::span<const double> c, std::span<const double> dw, std::span<double> out,
                   Workspace& ws) const {
        if (c.size() != disc_.n_modes || out.size() != disc_.n_modes) {
            throw std::invalid_argument("ExponentialIntegrator: state size mismatch");
        }
        const SineBasis& basis = *basis_;
        const std::size_t mp = basis.m_points();
        const double tau = disc_.tau();
        const bool nonlinear = model_.flux || model_.reaction || model_.diffusion;

        std::copy(c.begin(), c.end(), out.begin());
        if (nonlinear) {
            ws.x.resize(mp);
            detail::synthesize_into(c, basis, ws.x);
            ws.u.assign(mp, 0.0);
            bool any_u = false;
            if (model_.reaction) {
                for (std::size_t m = 0; m < mp; ++m) ws.u[m] = tau * model_.reaction(ws.x[m]);
                any_u = true;
            }
            if (model_.diffusion) {
                check_noise_modes(dw.size());
                ws.w.resize(mp);
                detail::synthesize_into(dw, basis, ws.w);
                for (std::size_t m = 0; m < mp; ++m) ws.u[m] += model_.diffusion(ws.x[m]) * ws.w[m];
                any_u = true;
            }
            if (any_u) {
                detail::accumulate_columns(
                    ws.u, [&](std::size_t m) { return basis.analysis_column(m); }, 1.0, out);
            }
            if (model_.flux) detail::accumulate_gradient(model_.flux, ws.x, basis, tau, out, ws.r);
        }
        for (std::size_t j = 0; j < out.size(); ++j) out[j] *= factors_[j];
        if (!detail::all_finite(out)) throw NumericalError("non-finite state in exponential integrator");
    }

    ModelSpec model_;
    Discretization disc_;
    std::shared_ptr<const SineBasis> basis_;
    std::vector<double> factors_;
};

} // namespace spde
