#pragma once

// Drift and diffusion of the stochastic advection-diffusion-reaction equation
//
//   dX = (X_xx + d/dx f(X) + f~(X)) dt + g(X) dW,   X(t,0) = X(t,1) = 0,
//
// as Nemytskii operators evaluated pseudospectrally on a SineBasis grid and
// projected back to the first N modes.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spde/error.hpp"
#include "spde/spectral.hpp"

namespace spde {

/// Scalar coefficient map R -> R. An empty map stands for the zero function.
using ScalarMap = std::function<double(double)>;

/// Initial-datum rule j -> c_j(0).
using CoeffRule = std::function<double(std::size_t)>;

struct LipschitzBounds {
    double flux = 0.0;
    double reaction = 0.0;
    double diffusion = 0.0;
};

struct ModelSpec {
    std::string id;
    ScalarMap flux;      // f, inside the gradient
    ScalarMap reaction;  // f~
    ScalarMap diffusion; // g
    std::optional<LipschitzBounds> lipschitz;
    double horizon = 1.0;
    CoeffRule initial_coeff;

    void validate() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw std::invalid_argument("ModelSpec: horizon must be positive and finite");
        }
        if (lipschitz && (lipschitz->flux < 0.0 || lipschitz->reaction < 0.0 ||
                          lipschitz->diffusion < 0.0)) {
            throw std::invalid_argument("ModelSpec: Lipschitz bounds must be nonnegative");
        }
        if (!initial_coeff) throw std::invalid_argument("ModelSpec: missing initial datum rule");
    }

    /// P_N X_0.
    [[nodiscard]] SpectralState initial_state(std::size_t n_modes) const {
        return SpectralState::from_rule(n_modes, initial_coeff);
    }
};

// Initial data ---------------------------------------------------------------

namespace datum {

/// c_j = j^-exponent; exponent 1.01 is the rough datum used in the rate
/// experiments (in H^theta for theta < 0.51).
[[nodiscard]] inline CoeffRule power_law(double exponent = 1.01) {
    return [exponent](std::size_t j) { return std::pow(static_cast<double>(j), -exponent); };
}

[[nodiscard]] inline CoeffRule single_mode(std::size_t k, double amplitude = 1.0) {
    return [k, amplitude](std::size_t j) { return j == k ? amplitude : 0.0; };
}

[[nodiscard]] inline CoeffRule zero() {
    return [](std::size_t) { return 0.0; };
}

/// Parses "paper", "zero", "e<k>" (single mode) or "power:<a>".
[[nodiscard]] inline CoeffRule parse(std::string_view name) {
    if (name == "paper") return power_law(1.01);
    if (name == "zero") return zero();
    try {
        if (name.size() > 1 && name.front() == 'e') {
            std::size_t used = 0;
            const std::string digits(name.substr(1));
            const unsigned long k = std::stoul(digits, &used);
            if (used == digits.size() && k >= 1) return single_mode(k);
        }
        if (name.starts_with("power:")) {
            std::size_t used = 0;
            const std::string num(name.substr(6));
            const double a = std::stod(num, &used);
            if (used == num.size() && std::isfinite(a)) return power_law(a);
        }
    } catch (const std::logic_error&) {
    }
    throw ConfigError("unknown initial datum '" + std::string(name) + "'");
}

} // namespace datum

// Built-in models --------------------------------------------------------------

/// f(v) = -v, f~(v) = -v / (1 + |v|), g(v) = (1 + v) / 8, X_0 = sum_j e_j / j^1.01.
[[nodiscard]] inline ModelSpec paper_example_model() {
    ModelSpec m;
    m.id = "paper-ex";
    m.flux = [](double v) { return -v; };
    m.reaction = [](double v) { return -v / (1.0 + std::abs(v)); };
    m.diffusion = [](double v) { return (1.0 + v) / 8.0; };
    m.lipschitz = LipschitzBounds{1.0, 1.0, 0.125};
    m.initial_coeff = datum::power_law(1.01);
    return m;
}

/// Deterministic heat equation: f = f~ = g = 0.
[[nodiscard]] inline ModelSpec heat_model() {
    ModelSpec m;
    m.id = "heat";
    m.lipschitz = LipschitzBounds{0.0, 0.0, 0.0};
    m.initial_coeff = datum::power_law(1.01);
    return m;
}

/// Additive noise: f = f~ = 0, g = sigma. Each mode is an Ornstein-Uhlenbeck
/// process.
[[nodiscard]] inline ModelSpec linear_additive_model(double sigma = 1.0) {
    ModelSpec m;
    m.id = "linear-additive";
    m.diffusion = [sigma](double) { return sigma; };
    m.lipschitz = LipschitzBounds{0.0, 0.0, 0.0};
    m.initial_coeff = datum::power_law(1.01);
    return m;
}

[[nodiscard]] inline std::vector<std::string> builtin_model_ids() {
    return {"paper-ex", "heat", "linear-additive"};
}

[[nodiscard]] inline ModelSpec builtin_model(std::string_view id) {
    if (id == "paper-ex") return paper_example_model();
    if (id == "heat") return heat_model();
    if (id == "linear-additive") return linear_additive_model();
    throw ConfigError("unknown model '" + std::string(id) + "'");
}

// Operators -----------------------------------------------------------------

namespace detail {

inline void require_grid(const SineBasis& basis, std::size_t n_modes, const char* what) {
    if (n_modes > basis.m_points()) {
        throw std::invalid_argument(std::string(what) + ": quadrature grid smaller than mode count");
    }
    require_rows(basis, n_modes, what);
}

// out[j] += scale * <d/dx f(X), e_j> for j < out.size(), given X on the grid.
// Weak form: <d/dx w, e_j> = -j pi <w, sqrt(2) cos(j pi .)>. The boundary
// values of w = f(X) are both f(0), so only the interior residual
// f(X(x_m)) - f(0) enters.
inline void accumulate_gradient(const ScalarMap& flux, std::span<const double> x_grid,
                                const SineBasis& basis, double scale, std::span<double> out,
                                std::vector<double>& scratch) {
    const double f0 = flux(0.0);
    scratch.resize(x_grid.size());
    for (std::size_t m = 0; m < x_grid.size(); ++m) scratch[m] = flux(x_grid[m]) - f0;
    const std::size_t n = out.size();
    std::vector<double> a(n, 0.0);
    accumulate_columns(scratch, [&](std::size_t m) { return basis.moment_column(m); }, 1.0, a);
    for (std::size_t j = 1; j <= n; ++j) {
        out[j - 1] += scale * (-static_cast<double>(j) * pi) * a[j - 1];
    }
}

} // namespace detail

/// Coefficients of P_N [d/dx f(X) + f~(X)]. Requires M >= N.
[[nodiscard]] inline SpectralState drift_apply(const SpectralState& state, const ModelSpec& model,
                                               const SineBasis& basis) {
    const std::size_t n = state.n_modes();
    detail::require_grid(basis, n, "drift_apply");
    std::vector<double> out(n, 0.0);
    if (!model.flux && !model.reaction) return SpectralState(std::move(out));

    std::vector<double> x(basis.m_points());
    detail::synthesize_into(state.coeffs(), basis, x);
    std::vector<double> scratch;
    if (model.flux) detail::accumulate_gradient(model.flux, x, basis, 1.0, out, scratch);
    if (model.reaction) {
        scratch.resize(x.size());
        for (std::size_t m = 0; m < x.size(); ++m) scratch[m] = model.reaction(x[m]);
        detail::accumulate_columns(
            scratch, [&](std::size_t m) { return basis.analysis_column(m); }, 1.0, out);
    }
    return SpectralState(std::move(out));
}

/// Coefficients of P_N [g(X) u] for a noise field u sampled on the same grid.
[[nodiscard]] inline SpectralState diffusion_apply(const SpectralState& state,
                                                   const ModelSpec& model,
                                                   const GridField& noise_field,
                                                   const SineBasis& basis) {
    const std::size_t n = state.n_modes();
    detail::require_grid(basis, n, "diffusion_apply");
    if (noise_field.grid() != basis.grid()) {
        throw std::invalid_argument("diffusion_apply: noise field grid does not match quadrature");
    }
    std::vector<double> out(n, 0.0);
    if (!model.diffusion) return SpectralState(std::move(out));

    std::vector<double> x(basis.m_points());
    detail::synthesize_into(state.coeffs(), basis, x);
    const auto u = noise_field.values();
    for (std::size_t m = 0; m < x.size(); ++m) x[m] = model.diffusion(x[m]) * u[m];
    detail::accumulate_columns(x, [&](std::size_t m) { return basis.analysis_column(m); }, 1.0, out);
    return SpectralState(std::move(out));
}

} // namespace spde
