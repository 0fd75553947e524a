#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "spde/spectral.hpp"
#include "support.hpp"

using namespace spde;
using testing_support::for_all;
using testing_support::Gen;
using testing_support::kPi;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

} // namespace

// Eigenvalues -------------------------------------------------------------------

TEST(Eigenvalue, FirstModes) {
    EXPECT_NEAR(eigenvalue(1), 9.8696044010893586, 1e-14);
    EXPECT_NEAR(eigenvalue(2), 39.478417604357434, 1e-13);
}

TEST(Eigenvalue, QuadraticScaling) {
    EXPECT_NEAR(eigenvalue(512) / (512.0 * 512.0), kPi * kPi, 1e-14);
    EXPECT_THROW((void)eigenvalue(0), std::invalid_argument);
}

TEST(Eigenfunction, MidpointOfFirstMode) {
    EXPECT_NEAR(eigenfunction(1, 0.5), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(eigenfunction(2, 0.5), 0.0, 1e-15);
}

// Grid trigonometry ---------------------------------------------------------------

TEST(GridSine, MatchesDirectEvaluation) {
    for_all(200, 11, [](Gen& g, std::size_t) {
        const std::size_t mp = g.index(1, 700);
        const std::size_t j = g.index(1, 3000);
        const std::size_t m = g.index(1, mp);
        const long double arg = static_cast<long double>(j) * static_cast<long double>(m) *
                                3.14159265358979323846264338327950288L / static_cast<long double>(mp + 1);
        EXPECT_NEAR(detail::grid_sine(j, m, mp), static_cast<double>(std::sin(arg)), 1e-14);
        EXPECT_NEAR(detail::grid_cosine(j, m, mp), static_cast<double>(std::cos(arg)), 1e-14);
    });
}

TEST(GridSine, DiscreteOrthogonality) {
    // sum_m sin(j pi m/(M+1)) sin(k pi m/(M+1)) = (M+1)/2 delta_jk, summed here
    // in long double straight from std::sin.
    for (std::size_t mp : {1u, 2u, 7u, 16u, 33u}) {
        for (std::size_t j = 1; j <= mp; ++j) {
            for (std::size_t k = 1; k <= mp; ++k) {
                long double s = 0.0L;
                for (std::size_t m = 1; m <= mp; ++m) {
                    const long double x = static_cast<long double>(m) / static_cast<long double>(mp + 1);
                    s += std::sin(static_cast<long double>(j) * kPi * x) * std::sin(static_cast<long double>(k) * kPi * x);
                }
                const double expect = j == k ? (static_cast<double>(mp) + 1.0) / 2.0 : 0.0;
                EXPECT_NEAR(static_cast<double>(s), expect, 1e-12) << "M=" << mp << " j=" << j << " k=" << k;
            }
        }
    }
}

// SpectralState -------------------------------------------------------------------

TEST(SpectralState, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(SpectralState(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(SpectralState(std::vector<double>{1.0, NAN}), std::invalid_argument);
    EXPECT_THROW(SpectralState(std::vector<double>{INFINITY}), std::invalid_argument);
    EXPECT_THROW(SpectralState(std::size_t{0}), std::invalid_argument);
}

TEST(SpectralState, OneBasedAccessPadsWithZero) {
    const SpectralState s(std::vector<double>{3.0, 4.0});
    EXPECT_EQ(s.coeff(1), 3.0);
    EXPECT_EQ(s.coeff(2), 4.0);
    EXPECT_EQ(s.coeff(9), 0.0);
    EXPECT_THROW((void)s.coeff(0), std::out_of_range);
    EXPECT_DOUBLE_EQ(s.norm(), 5.0);
}

TEST(SpectralState, DistancePadsShorterState) {
    const SpectralState a(std::vector<double>{1.0, 2.0, 2.0});
    const SpectralState b(std::vector<double>{1.0});
    EXPECT_DOUBLE_EQ(l2_distance(a, b), std::sqrt(8.0));
    EXPECT_DOUBLE_EQ(l2_distance(b, a), std::sqrt(8.0));
}

// Synthesis and analysis ------------------------------------------------------------

TEST(Synthesize, FirstModeAtMidpoint) {
    const SineBasis basis(3, 1);
    const auto out = synthesize(SpectralState(std::vector<double>{1.0}), basis);
    EXPECT_NEAR(out.values.values()[1], std::sqrt(2.0), 1e-15);
    EXPECT_EQ(*out.values.boundary(), (BoundaryValues{0.0, 0.0}));
}

TEST(Synthesize, ZeroStateGivesZeroValuesAndDerivative) {
    const SineBasis basis(16, 8);
    const auto out = synthesize(SpectralState(std::size_t{8}), basis, Derivative::yes);
    for (double v : out.values.values()) EXPECT_EQ(v, 0.0);
    ASSERT_TRUE(out.derivative);
    for (double v : out.derivative->values()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(*out.derivative->boundary(), (BoundaryValues{0.0, 0.0}));
}

TEST(Synthesize, DerivativeMatchesClosedForm) {
    for_all(50, 12, [](Gen& g, std::size_t) {
        const std::size_t n = g.index(1, 20);
        const std::size_t mp = g.index(n, 80);
        const auto c = g.normals(n);
        const SineBasis basis(mp, n);
        const auto out = synthesize(SpectralState(c), basis, Derivative::yes);
        auto deriv = [&](double x) {
            long double s = 0.0L;
            for (std::size_t j = 1; j <= n; ++j) {
                s += c[j - 1] * std::sqrt(2.0L) * static_cast<long double>(j) * kPi *
                     std::cos(static_cast<long double>(j) * kPi * x);
            }
            return static_cast<double>(s);
        };
        for (std::size_t m = 1; m <= mp; ++m) {
            EXPECT_NEAR(out.derivative->values()[m - 1], deriv(testing_support::node(m, mp)), 1e-10);
        }
        EXPECT_NEAR(out.derivative->boundary()->left, deriv(0.0), 1e-10);
        EXPECT_NEAR(out.derivative->boundary()->right, deriv(1.0), 1e-10);
    });
}

TEST(Analyze, RoundTripIsIdentity) {
    for_all(1000, 13, [](Gen& g, std::size_t) {
        const std::size_t mp = g.index(1, 96);
        const std::size_t n = g.index(1, mp);
        const SineBasis basis(mp, n);
        const SpectralState s(g.normals(n));
        const auto back = analyze(synthesize(s, basis).values, n, basis);
        EXPECT_LE(testing_support::max_abs_diff(to_vec(back.coeffs()), to_vec(s.coeffs())), 1e-12);
    });
}

TEST(Analyze, SingleModeSamples) {
    const SineBasis basis(10, 6);
    const auto field = GridField::sample(basis.grid(), [](double x) { return testing_support::sine_mode(3, x); });
    const auto c = analyze(field, 6, basis);
    for (std::size_t j = 1; j <= 6; ++j) EXPECT_NEAR(c.coeff(j), j == 3 ? 1.0 : 0.0, 1e-14);
}

TEST(Analyze, ZeroField) {
    const SineBasis basis(5, 5);
    const auto c = analyze(GridField(basis.grid(), std::vector<double>(5, 0.0)), 5, basis);
    for (double v : c.coeffs()) EXPECT_EQ(v, 0.0);
}

TEST(Analyze, TruncationDropsHigherModes) {
    const SineBasis basis(8, 2);
    const auto field = GridField::sample(basis.grid(), [](double x) {
        return testing_support::sine_mode(1, x) + 2.0 * testing_support::sine_mode(2, x);
    });
    const auto c = analyze(field, 1, basis);
    ASSERT_EQ(c.n_modes(), 1u);
    EXPECT_NEAR(c.coeff(1), 1.0, 1e-14);
}

TEST(Analyze, RejectsAliasingAndGridMismatch) {
    const SineBasis basis(4, 4);
    const GridField field(basis.grid(), std::vector<double>(4, 1.0));
    EXPECT_THROW((void)analyze(field, 5, basis), std::invalid_argument);
    const GridField other(GridGeometry{5}, std::vector<double>(5, 1.0));
    EXPECT_THROW((void)analyze(other, 2, basis), std::invalid_argument);
}

// Cosine moments ------------------------------------------------------------------

TEST(CosineMoments, ConstantHasNoMoments) {
    const SineBasis basis(32, 16);
    const auto a = cosine_moments(GridField::sample(basis.grid(), [](double) { return 1.0; }, true), 16, basis);
    for (double v : a) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(CosineMoments, FirstCosineMode) {
    // The interpolant of sqrt(2) cos(pi x) is not exact, but its residual is
    // smooth with a j^-3 sine spectrum, so the moments converge as M^-2.
    const SineBasis basis(512, 8);
    const auto a = cosine_moments(
        GridField::sample(basis.grid(), [](double x) { return std::sqrt(2.0) * std::cos(kPi * x); }, true), 8, basis);
    EXPECT_NEAR(a[0], 1.0, 1e-5);
    for (std::size_t j = 1; j < 8; ++j) EXPECT_NEAR(a[j], 0.0, 1e-5);
}

TEST(CosineMoments, LinearFunctionClosedForm) {
    // int_0^1 x sqrt(2) cos(j pi x) dx = sqrt(2)((-1)^j - 1)/(j pi)^2; first
    // confirm the closed form by brute-force quadrature, then the library.
    auto closed = [](std::size_t j) {
        const double sign = j % 2 == 0 ? 1.0 : -1.0;
        return std::sqrt(2.0) * (sign - 1.0) / std::pow(static_cast<double>(j) * kPi, 2);
    };
    for (std::size_t j = 1; j <= 6; ++j) {
        const double q = testing_support::simpson(
            [j](double x) { return x * std::sqrt(2.0) * std::cos(static_cast<double>(j) * kPi * x); }, 0.0, 1.0);
        EXPECT_NEAR(q, closed(j), 1e-13);
    }
    EXPECT_NEAR(closed(1), -0.28657958412537813, 1e-15);

    const SineBasis basis(64, 40);
    const auto a = cosine_moments(GridField::sample(basis.grid(), [](double x) { return x; }, true), 40, basis);
    for (std::size_t j = 1; j <= 40; ++j) EXPECT_NEAR(a[j - 1], closed(j), 1e-14) << j;
}

TEST(CosineMoments, ExactForLinearPlusSinePolynomial) {
    // w = l + sum_k b_k e_k with k <= M is reproduced exactly by the rule.
    for_all(20, 14, [](Gen& g, std::size_t) {
        const std::size_t mp = g.index(4, 24);
        const std::size_t modes = g.index(1, mp);
        const auto b = g.normals(modes);
        const double w0 = g.uniform(-2, 2);
        const double w1 = g.uniform(-2, 2);
        auto w = [&](double x) {
            double s = w0 + (w1 - w0) * x;
            for (std::size_t k = 1; k <= modes; ++k) s += b[k - 1] * testing_support::sine_mode(k, x);
            return s;
        };
        const SineBasis basis(mp, mp);
        const auto a = cosine_moments(GridField::sample(basis.grid(), w, true), mp, basis);
        for (std::size_t j = 1; j <= mp; ++j) {
            const double q = testing_support::simpson(
                [&](double x) { return w(x) * std::sqrt(2.0) * std::cos(static_cast<double>(j) * kPi * x); }, 0.0,
                1.0, 4000);
            EXPECT_NEAR(a[j - 1], q, 1e-10) << "j=" << j;
        }
    });
}

TEST(CosineMoments, RequiresBoundary) {
    const SineBasis basis(4, 4);
    EXPECT_THROW((void)cosine_moments(GridField(basis.grid(), std::vector<double>(4, 0.0)), 4, basis),
                 std::invalid_argument);
}

// Semigroup -----------------------------------------------------------------------

TEST(Semigroup, ZeroTimeIsIdentity) {
    const SpectralState s(std::vector<double>{1.0, -2.0, 0.5});
    EXPECT_EQ(semigroup_apply(s, 0.0), s);
}

TEST(Semigroup, FirstModeDecay) {
    const auto out = semigroup_apply(SpectralState(std::vector<double>{1.0, 0.0}), 0.1);
    EXPECT_NEAR(out.coeff(1), 0.37270783885343791, 1e-15);
    EXPECT_EQ(out.coeff(2), 0.0);
}

TEST(Semigroup, CompositionProperty) {
    for_all(100, 15, [](Gen& g, std::size_t) {
        const SpectralState s(g.decaying(g.index(1, 40)));
        const double t1 = g.uniform(0.0, 0.05);
        const double t2 = g.uniform(0.0, 0.05);
        const auto twice = semigroup_apply(semigroup_apply(s, t1), t2);
        const auto once = semigroup_apply(s, t1 + t2);
        for (std::size_t j = 1; j <= s.n_modes(); ++j) {
            EXPECT_NEAR(twice.coeff(j), once.coeff(j), 1e-15 * (1.0 + std::abs(s.coeff(j))));
        }
    });
}

TEST(Semigroup, RejectsNegativeTime) {
    EXPECT_THROW((void)semigroup_apply(SpectralState(std::size_t{2}), -1e-3), std::invalid_argument);
}

TEST(Semigroup, IsContraction) {
    for_all(100, 16, [](Gen& g, std::size_t) {
        const SpectralState s(g.normals(g.index(1, 64)));
        EXPECT_LE(semigroup_apply(s, g.uniform(0.0, 1.0)).norm(), s.norm());
    });
}

// Sobolev norm ----------------------------------------------------------------------

TEST(SobolevNorm, ThetaZeroIsEuclidean) {
    const SpectralState s(std::vector<double>{3.0, 4.0});
    EXPECT_DOUBLE_EQ(sobolev_norm(s, 0.0), 5.0);
}

TEST(SobolevNorm, FirstModeThetaOne) {
    EXPECT_NEAR(sobolev_norm(SpectralState(std::vector<double>{1.0}), 1.0), kPi, 1e-15);
}

TEST(SobolevNorm, PowerLawDatumRegression) {
    // (sum_{j<=512} j^-2.02)^(1/2), summed at 30 digits.
    const auto s = SpectralState::from_rule(512, [](std::size_t j) { return std::pow(static_cast<double>(j), -1.01); });
    EXPECT_NEAR(sobolev_norm(s, 0.0), 1.2747096030894752, 1e-14);
}

TEST(SobolevNorm, MonotoneInTheta) {
    for_all(50, 17, [](Gen& g, std::size_t) {
        const SpectralState s(g.normals(g.index(1, 32)));
        const double a = g.uniform(0.0, 1.0);
        EXPECT_LE(sobolev_norm(s, a), sobolev_norm(s, a + g.uniform(0.0, 1.0)) * (1 + 1e-15));
    });
}
