#pragma once

// Sine eigenbasis of the Dirichlet Laplacian on (0,1).
//
//   e_j(x) = sqrt(2) sin(j pi x),   lambda_j = (j pi)^2,   j = 1, 2, ...
//
// Functions are represented either spectrally (SpectralState, coefficients of
// the first N eigenfunctions) or on the uniform interior grid
// x_m = m / (M + 1), m = 1..M (GridField). Transforms are direct O(N M) sums
// against tables held by a SineBasis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spde {

inline constexpr double pi = std::numbers::pi;
inline constexpr double sqrt2 = std::numbers::sqrt2;

/// Dirichlet eigenvalue lambda_j = (j pi)^2, j >= 1.
[[nodiscard]] inline double eigenvalue(std::size_t j) {
    if (j == 0) {
        throw std::invalid_argument("eigenvalue: mode index starts at 1");
    }
    const auto jd = static_cast<double>(j);
    return (jd * jd) * (pi * pi);
}

/// Eigenfunction e_j(x) = sqrt(2) sin(j pi x).
[[nodiscard]] inline double eigenfunction(std::size_t j, double x) {
    return sqrt2 * std::sin(static_cast<double>(j) * pi * x);
}

namespace detail {

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// sin(pi * j * m / (M + 1)) with the integer argument reduced modulo the
// period first, so large j*m do not lose accuracy.
inline double grid_sine(std::size_t j, std::size_t m, std::size_t m_points) {
    const std::size_t period = 2 * (m_points + 1);
    const std::size_t q = (j * m) % period;
    return std::sin(pi * static_cast<double>(q) / static_cast<double>(m_points + 1));
}

inline double grid_cosine(std::size_t j, std::size_t m, std::size_t m_points) {
    const std::size_t period = 2 * (m_points + 1);
    const std::size_t q = (j * m) % period;
    return std::cos(pi * static_cast<double>(q) / static_cast<double>(m_points + 1));
}

} // namespace detail

/// Coefficients (c_1, ..., c_N) of X = sum_j c_j e_j. Immutable; entries are
/// finite by construction.
class SpectralState {
public:
    SpectralState() = default;

    /// Zero state on n modes.
    explicit SpectralState(std::size_t n_modes) : coeffs_(n_modes, 0.0) {
        if (n_modes == 0) {
            throw std::invalid_argument("SpectralState: n_modes must be positive");
        }
    }

    explicit SpectralState(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) {
            throw std::invalid_argument("SpectralState: n_modes must be positive");
        }
        if (!detail::all_finite(coeffs_)) {
            throw std::invalid_argument("SpectralState: non-finite coefficient");
        }
    }

    /// State with c_j = rule(j) for j = 1..n.
    template <class Rule>
    [[nodiscard]] static SpectralState from_rule(std::size_t n_modes, Rule&& rule) {
        std::vector<double> c(n_modes);
        for (std::size_t j = 1; j <= n_modes; ++j) {
            c[j - 1] = static_cast<double>(rule(j));
        }
        return SpectralState(std::move(c));
    }

    [[nodiscard]] std::size_t n_modes() const noexcept { return coeffs_.size(); }
    [[nodiscard]] std::span<const double> coeffs() const noexcept { return coeffs_; }

    /// 1-based access; modes beyond n_modes read as zero.
    [[nodiscard]] double coeff(std::size_t j) const {
        if (j == 0) {
            throw std::out_of_range("SpectralState::coeff: mode index starts at 1");
        }
        return j <= coeffs_.size() ? coeffs_[j - 1] : 0.0;
    }

    /// Euclidean norm of the coefficients, equal to the L2(0,1) norm.
    [[nodiscard]] double norm() const noexcept {
        double s = 0.0;
        for (double c : coeffs_) s += c * c;
        return std::sqrt(s);
    }

    friend bool operator==(const SpectralState&, const SpectralState&) = default;

private:
    std::vector<double> coeffs_;
};

/// L2 distance between two states; the shorter one is zero-padded.
[[nodiscard]] inline double l2_distance(const SpectralState& a, const SpectralState& b) {
    const auto ca = a.coeffs();
    const auto cb = b.coeffs();
    const std::size_t n = std::max(ca.size(), cb.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (i < ca.size() ? ca[i] : 0.0) - (i < cb.size() ? cb[i] : 0.0);
        s += x * x;
    }
    return std::sqrt(s);
}

/// Uniform interior grid x_m = m / (M + 1), m = 1..M.
struct GridGeometry {
    std::size_t m_points = 0;

    [[nodiscard]] double spacing() const noexcept {
        return 1.0 / static_cast<double>(m_points + 1);
    }
    /// 1-based interior node.
    [[nodiscard]] double node(std::size_t m) const noexcept {
        return static_cast<double>(m) / static_cast<double>(m_points + 1);
    }
    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Values at x(0), x(1).
struct BoundaryValues {
    double left = 0.0;
    double right = 0.0;
    friend bool operator==(const BoundaryValues&, const BoundaryValues&) = default;
};

/// Samples v(x_1), ..., v(x_M) with optional boundary samples.
class GridField {
public:
    GridField() = default;

    GridField(GridGeometry grid, std::vector<double> values,
              std::optional<BoundaryValues> boundary = std::nullopt)
        : grid_(grid), values_(std::move(values)), boundary_(boundary) {
        if (grid_.m_points == 0) {
            throw std::invalid_argument("GridField: m_points must be positive");
        }
        if (values_.size() != grid_.m_points) {
            throw std::invalid_argument("GridField: value count does not match m_points");
        }
        if (!detail::all_finite(values_) ||
            (boundary_ && !(std::isfinite(boundary_->left) && std::isfinite(boundary_->right)))) {
            throw std::invalid_argument("GridField: non-finite sample");
        }
    }

    /// Samples fn at the interior nodes, and at 0 and 1 when with_boundary.
    template <class Fn>
    [[nodiscard]] static GridField sample(GridGeometry grid, Fn&& fn, bool with_boundary = false) {
        std::vector<double> v(grid.m_points);
        for (std::size_t m = 1; m <= grid.m_points; ++m) v[m - 1] = fn(grid.node(m));
        std::optional<BoundaryValues> b;
        if (with_boundary) b = BoundaryValues{fn(0.0), fn(1.0)};
        return GridField(grid, std::move(v), b);
    }

    [[nodiscard]] const GridGeometry& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t m_points() const noexcept { return grid_.m_points; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] const std::optional<BoundaryValues>& boundary() const noexcept { return boundary_; }

private:
    GridGeometry grid_;
    std::vector<double> values_;
    std::optional<BoundaryValues> boundary_;
};

/// Precomputed transform tables for a grid of M interior points and modes
/// j = 1..rows. Immutable after construction except for the lazily built
/// moment tables, whose construction is synchronized; safe to share across
/// threads.
///
/// Tables:
///  - synthesis rows    sqrt(2) sin(j pi x_m), laid out [j][m];
///  - analysis columns  h sqrt(2) sin(j pi x_m), laid out [m][j];
///  - moment columns    weights giving the cosine moments
///                      a_j = int_0^1 w(x) sqrt(2) cos(j pi x) dx of the
///                      sine interpolant of w, laid out [m][j].
class SineBasis {
public:
    SineBasis(std::size_t m_points, std::size_t rows) : m_(m_points), rows_(rows) {
        if (m_ == 0 || rows_ == 0) {
            throw std::invalid_argument("SineBasis: grid size and row count must be positive");
        }
        synthesis_.resize(rows_ * m_);
        analysis_.resize(m_ * rows_);
        const double h = grid().spacing();
        for (std::size_t j = 1; j <= rows_; ++j) {
            for (std::size_t m = 1; m <= m_; ++m) {
                const double s = detail::grid_sine(j, m, m_);
                synthesis_[(j - 1) * m_ + (m - 1)] = sqrt2 * s;
                analysis_[(m - 1) * rows_ + (j - 1)] = h * sqrt2 * s;
            }
        }
    }

    SineBasis(const SineBasis&) = delete;
    SineBasis& operator=(const SineBasis&) = delete;

    [[nodiscard]] GridGeometry grid() const noexcept { return GridGeometry{m_}; }
    [[nodiscard]] std::size_t m_points() const noexcept { return m_; }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }

    /// sqrt(2) sin(j pi x_m), m = 1..M, for 1 <= j <= rows.
    [[nodiscard]] std::span<const double> synthesis_row(std::size_t j) const noexcept {
        return {synthesis_.data() + (j - 1) * m_, m_};
    }

    /// h sqrt(2) sin(j pi x_m), j = 1..rows, for 1 <= m <= M.
    [[nodiscard]] std::span<const double> analysis_column(std::size_t m) const noexcept {
        return {analysis_.data() + (m - 1) * rows_, rows_};
    }

    /// Moment weights for grid node m, j = 1..rows. Applied to samples of
    /// w - l, where l is the linear interpolant of the boundary values.
    [[nodiscard]] std::span<const double> moment_column(std::size_t m) const {
        build_moments();
        return {moments_.data() + (m - 1) * rows_, rows_};
    }

    /// Cosine moments of the linear function x, j = 1..rows:
    /// sqrt(2) ((-1)^j - 1) / (j pi)^2.
    [[nodiscard]] std::span<const double> linear_moments() const {
        build_moments();
        return linear_;
    }

private:
    // The interpolant is sum_{k<=M} b_k e_k with b = DST of the samples, and
    //   <e_k, sqrt(2) cos(j pi .)> = 4k / (pi (k^2 - j^2))  if k + j odd, else 0.
    // Folding the DST into that mixing gives one [m][j] weight table.
    void build_moments() const {
        std::call_once(moments_once_, [this] {
            std::vector<double> by_row(rows_ * m_, 0.0);
            std::vector<double> dst_row(m_);
            const double h = grid().spacing();
            for (std::size_t k = 1; k <= m_; ++k) {
                for (std::size_t m = 1; m <= m_; ++m) {
                    dst_row[m - 1] = h * sqrt2 * detail::grid_sine(k, m, m_);
                }
                const auto kd = static_cast<double>(k);
                for (std::size_t j = (k % 2 == 0) ? 1 : 2; j <= rows_; j += 2) {
                    const auto jd = static_cast<double>(j);
                    const double mix = 4.0 * kd / (pi * (kd * kd - jd * jd));
                    double* out = by_row.data() + (j - 1) * m_;
                    for (std::size_t m = 0; m < m_; ++m) out[m] += mix * dst_row[m];
                }
            }
            std::vector<double> table(m_ * rows_);
            for (std::size_t j = 0; j < rows_; ++j) {
                for (std::size_t m = 0; m < m_; ++m) table[m * rows_ + j] = by_row[j * m_ + m];
            }
            std::vector<double> linear(rows_);
            for (std::size_t j = 1; j <= rows_; ++j) {
                const double jp = static_cast<double>(j) * pi;
                linear[j - 1] = (j % 2 == 0) ? 0.0 : -2.0 * sqrt2 / (jp * jp);
            }
            moments_ = std::move(table);
            linear_ = std::move(linear);
        });
    }

    std::size_t m_;
    std::size_t rows_;
    std::vector<double> synthesis_;
    std::vector<double> analysis_;
    mutable std::once_flag moments_once_;
    mutable std::vector<double> moments_;
    mutable std::vector<double> linear_;
};

[[nodiscard]] inline std::shared_ptr<const SineBasis> make_basis(std::size_t m_points,
                                                                 std::size_t rows) {
    return std::make_shared<const SineBasis>(m_points, rows);
}

namespace detail {

// out[m] = sum_j c_j sqrt(2) sin(j pi x_m); out must have M entries.
inline void synthesize_into(std::span<const double> coeffs, const SineBasis& basis,
                            std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t mp = basis.m_points();
    for (std::size_t j = 1; j <= coeffs.size(); ++j) {
        const double c = coeffs[j - 1];
        if (c == 0.0) continue;
        const double* row = basis.synthesis_row(j).data();
        for (std::size_t m = 0; m < mp; ++m) out[m] += c * row[m];
    }
}

// out[j] += scale * sum_m values[m] column_m[j] for j < out.size().
template <class ColumnFn>
inline void accumulate_columns(std::span<const double> values, ColumnFn&& column, double scale,
                               std::span<double> out) {
    const std::size_t n = out.size();
    for (std::size_t m = 1; m <= values.size(); ++m) {
        const double v = scale * values[m - 1];
        if (v == 0.0) continue;
        const double* col = column(m).data();
        for (std::size_t j = 0; j < n; ++j) out[j] += v * col[j];
    }
}

inline void require_rows(const SineBasis& basis, std::size_t n, const char* what) {
    if (n > basis.rows()) {
        throw std::invalid_argument(std::string(what) + ": basis has fewer rows than requested modes");
    }
}

} // namespace detail

/// Result of synthesize: function values and, on request, x-derivative values.
struct Synthesis {
    GridField values;
    std::optional<GridField> derivative;
};

enum class Derivative { no, yes };

/// Evaluates sum_j c_j e_j on the interior grid (boundary values are 0).
/// With Derivative::yes also returns sum_j c_j sqrt(2) j pi cos(j pi x),
/// including its boundary values.
[[nodiscard]] inline Synthesis synthesize(const SpectralState& state, const SineBasis& basis,
                                          Derivative derivative = Derivative::no) {
    detail::require_rows(basis, state.n_modes(), "synthesize");
    const std::size_t mp = basis.m_points();
    std::vector<double> v(mp);
    detail::synthesize_into(state.coeffs(), basis, v);
    Synthesis out{GridField(basis.grid(), std::move(v), BoundaryValues{0.0, 0.0}), std::nullopt};
    if (derivative == Derivative::yes) {
        std::vector<double> d(mp, 0.0);
        double left = 0.0;
        double right = 0.0;
        const auto c = state.coeffs();
        for (std::size_t j = 1; j <= c.size(); ++j) {
            const double a = c[j - 1] * sqrt2 * static_cast<double>(j) * pi;
            for (std::size_t m = 1; m <= mp; ++m) d[m - 1] += a * detail::grid_cosine(j, m, mp);
            left += a;
            right += (j % 2 == 0) ? a : -a;
        }
        out.derivative = GridField(basis.grid(), std::move(d), BoundaryValues{left, right});
    }
    return out;
}

/// Discrete projection onto the first n modes:
///   c_j = h sum_m v(x_m) sqrt(2) sin(j pi x_m),  h = 1 / (M + 1).
/// Exact for fields in span{e_1, ..., e_M}. Requires n <= M.
[[nodiscard]] inline SpectralState analyze(const GridField& field, std::size_t n_modes,
                                           const SineBasis& basis) {
    if (n_modes == 0) throw std::invalid_argument("analyze: n_modes must be positive");
    if (n_modes > field.m_points()) {
        throw std::invalid_argument("analyze: n_modes exceeds grid size (aliasing)");
    }
    if (field.grid() != basis.grid()) throw std::invalid_argument("analyze: grid mismatch");
    detail::require_rows(basis, n_modes, "analyze");
    std::vector<double> c(n_modes, 0.0);
    detail::accumulate_columns(
        field.values(), [&](std::size_t m) { return basis.analysis_column(m); }, 1.0, c);
    return SpectralState(std::move(c));
}

/// Cosine moments a_j = int_0^1 w(x) sqrt(2) cos(j pi x) dx, j = 1..n, of the
/// field w. The field must carry boundary values. The integral is taken
/// exactly for the function w = l + r, where l is the linear interpolant of
/// the boundary values and r is the sine interpolant of the interior
/// residual samples w(x_m) - l(x_m).
[[nodiscard]] inline std::vector<double> cosine_moments(const GridField& field, std::size_t n_modes,
                                                        const SineBasis& basis) {
    if (n_modes == 0) throw std::invalid_argument("cosine_moments: n_modes must be positive");
    if (!field.boundary()) throw std::invalid_argument("cosine_moments: boundary values required");
    if (field.grid() != basis.grid()) throw std::invalid_argument("cosine_moments: grid mismatch");
    detail::require_rows(basis, n_modes, "cosine_moments");

    const auto [w0, w1] = *field.boundary();
    const GridGeometry g = field.grid();
    std::vector<double> residual(g.m_points);
    const auto v = field.values();
    for (std::size_t m = 1; m <= g.m_points; ++m) {
        residual[m - 1] = v[m - 1] - (w0 + (w1 - w0) * g.node(m));
    }
    std::vector<double> a(n_modes, 0.0);
    detail::accumulate_columns(
        residual, [&](std::size_t m) { return basis.moment_column(m); }, 1.0, a);
    const auto lin = basis.linear_moments();
    for (std::size_t j = 0; j < n_modes; ++j) a[j] += (w1 - w0) * lin[j];
    return a;
}

/// exp(-lambda_j t), j = 1..n.
[[nodiscard]] inline std::vector<double> semigroup_factors(std::size_t n_modes, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup: negative time");
    std::vector<double> f(n_modes);
    for (std::size_t j = 1; j <= n_modes; ++j) f[j - 1] = std::exp(-eigenvalue(j) * t);
    return f;
}

/// S(t) X: c_j -> exp(-lambda_j t) c_j. Rejects t < 0.
[[nodiscard]] inline SpectralState semigroup_apply(const SpectralState& state, double t) {
    const auto f = semigroup_factors(state.n_modes(), t);
    std::vector<double> c(state.coeffs().begin(), state.coeffs().end());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= f[i];
    return SpectralState(std::move(c));
}

/// Fractional Sobolev norm (sum_j lambda_j^theta c_j^2)^(1/2).
[[nodiscard]] inline double sobolev_norm(const SpectralState& state, double theta) {
    const auto c = state.coeffs();
    double s = 0.0;
    for (std::size_t j = 1; j <= c.size(); ++j) {
        const double w = theta == 0.0 ? 1.0 : std::pow(eigenvalue(j), theta);
        s += w * c[j - 1] * c[j - 1];
    }
    return std::sqrt(s);
}

} // namespace spde
