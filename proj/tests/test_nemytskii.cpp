#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "spde/nemytskii.hpp"
#include "spde/noise.hpp"
#include "support.hpp"

using namespace spde;
using testing_support::for_all;
using testing_support::Gen;
using testing_support::kPi;

namespace {

ModelSpec only(ScalarMap flux, ScalarMap reaction, ScalarMap diffusion = {}) {
    ModelSpec m;
    m.id = "test";
    m.flux = std::move(flux);
    m.reaction = std::move(reaction);
    m.diffusion = std::move(diffusion);
    m.initial_coeff = datum::zero();
    return m;
}

// -2 pi int_0^1 cos(pi x) sin(k pi x) dx by quadrature.
double gradient_of_first_mode(std::size_t k) {
    return -2.0 * kPi *
           testing_support::simpson(
               [k](double x) { return std::cos(kPi * x) * std::sin(static_cast<double>(k) * kPi * x); }, 0.0, 1.0);
}

} // namespace

// Initial data and built-in models ---------------------------------------------------

TEST(Datum, PowerLaw) {
    const auto r = datum::power_law(1.01);
    EXPECT_EQ(r(1), 1.0);
    EXPECT_NEAR(r(8), std::pow(8.0, -1.01), 1e-16);
}

TEST(Datum, Parse) {
    EXPECT_NEAR(datum::parse("paper")(4), std::pow(4.0, -1.01), 1e-16);
    EXPECT_EQ(datum::parse("zero")(3), 0.0);
    EXPECT_EQ(datum::parse("e2")(2), 1.0);
    EXPECT_EQ(datum::parse("e2")(1), 0.0);
    EXPECT_NEAR(datum::parse("power:0.75")(16), 0.125, 1e-16);
    EXPECT_THROW((void)datum::parse("e0"), ConfigError);
    EXPECT_THROW((void)datum::parse("power:x"), ConfigError);
    EXPECT_THROW((void)datum::parse("bogus"), ConfigError);
}

TEST(Models, BuiltinsResolveAndValidate) {
    for (const auto& id : builtin_model_ids()) {
        const auto m = builtin_model(id);
        EXPECT_EQ(m.id, id);
        EXPECT_NO_THROW(m.validate());
    }
    EXPECT_THROW((void)builtin_model("nope"), ConfigError);
}

TEST(Models, PaperExampleCoefficients) {
    const auto m = paper_example_model();
    EXPECT_EQ(m.flux(2.0), -2.0);
    EXPECT_DOUBLE_EQ(m.reaction(-3.0), 0.75);
    EXPECT_DOUBLE_EQ(m.diffusion(0.0), 0.125);
    EXPECT_DOUBLE_EQ(m.diffusion(1.0), 0.25);
    EXPECT_EQ(m.flux(0.0), 0.0);
    EXPECT_EQ(m.reaction(0.0), 0.0);
}

TEST(Models, ValidateRejectsBadSpecs) {
    auto m = heat_model();
    m.horizon = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = heat_model();
    m.lipschitz = LipschitzBounds{-1.0, 0.0, 0.0};
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = heat_model();
    m.initial_coeff = nullptr;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

// Drift -----------------------------------------------------------------------------

TEST(Drift, LinearReactionNegatesState) {
    for_all(50, 21, [](Gen& g, std::size_t) {
        const std::size_t n = g.index(1, 48);
        const SineBasis basis(2 * n, n);
        const SpectralState s(g.normals(n));
        const auto out = drift_apply(s, only({}, [](double v) { return -v; }), basis);
        for (std::size_t j = 1; j <= n; ++j) EXPECT_NEAR(out.coeff(j), -s.coeff(j), 1e-13);
    });
}

TEST(Drift, GradientOfFirstModeClosedForm) {
    // The closed forms -8/3 and -16/15 agree with quadrature.
    EXPECT_NEAR(gradient_of_first_mode(2), -8.0 / 3.0, 1e-12);
    EXPECT_NEAR(gradient_of_first_mode(4), -16.0 / 15.0, 1e-12);
    EXPECT_NEAR(gradient_of_first_mode(3), 0.0, 1e-12);

    const SineBasis basis(4096, 8);
    const auto out = drift_apply(SpectralState(std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0}),
                                 only([](double v) { return -v; }, {}), basis);
    EXPECT_NEAR(out.coeff(2), -8.0 / 3.0, 1e-10);
    EXPECT_NEAR(out.coeff(4), -16.0 / 15.0, 1e-10);
    for (std::size_t j : {1u, 3u, 5u, 7u}) EXPECT_NEAR(out.coeff(j), 0.0, 1e-10);
    for (std::size_t j : {6u, 8u}) EXPECT_NEAR(out.coeff(j), gradient_of_first_mode(j), 1e-10);
}

TEST(Drift, LinearFluxExactOnCoarseGrids) {
    // For f(v) = -v the weak form is exact whenever the state is resolved.
    for_all(30, 22, [](Gen& g, std::size_t) {
        const std::size_t n = g.index(1, 24);
        const std::size_t mp = g.index(n, 3 * n);
        const SineBasis basis(mp, n);
        const auto c = g.normals(n);
        const auto out = drift_apply(SpectralState(c), only([](double v) { return -v; }, {}), basis);
        for (std::size_t k = 1; k <= n; ++k) {
            // -d/dx X projected on e_k, summed mode by mode from closed-form integrals.
            double expect = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                if ((j + k) % 2 == 0) continue;
                const double jj = static_cast<double>(j), kk = static_cast<double>(k);
                expect += -c[j - 1] * jj * kPi * 2.0 * (kk * 2.0 / (kPi * (kk * kk - jj * jj)));
            }
            EXPECT_NEAR(out.coeff(k), expect, 1e-11 * (1.0 + std::abs(expect))) << "k=" << k;
        }
    });
}

TEST(Drift, NonlinearFluxConvergesToProjection) {
    // f(v) = v^2 / 2: d/dx f(X) = X X'. Compared with quadrature of the exact
    // function; the sine interpolant of f(X) is accurate to O(M^-2).
    const std::vector<double> c{0.7, -0.3, 0.2};
    auto X = [&](double x) {
        double s = 0.0;
        for (std::size_t j = 1; j <= c.size(); ++j) s += c[j - 1] * testing_support::sine_mode(j, x);
        return s;
    };
    auto dX = [&](double x) {
        double s = 0.0;
        for (std::size_t j = 1; j <= c.size(); ++j) {
            s += c[j - 1] * std::sqrt(2.0) * static_cast<double>(j) * kPi * std::cos(static_cast<double>(j) * kPi * x);
        }
        return s;
    };
    const std::size_t n = 8;
    const SineBasis basis(1024, n);
    const auto out = drift_apply(SpectralState(std::vector<double>{0.7, -0.3, 0.2, 0, 0, 0, 0, 0}),
                                 only([](double v) { return 0.5 * v * v; }, {}), basis);
    for (std::size_t k = 1; k <= n; ++k) {
        const double q = testing_support::simpson(
            [&](double x) { return X(x) * dX(x) * testing_support::sine_mode(k, x); }, 0.0, 1.0);
        EXPECT_NEAR(out.coeff(k), q, 1e-6) << "k=" << k;
    }
}

TEST(Drift, ZeroStateWithVanishingMaps) {
    const SineBasis basis(32, 16);
    const auto out = drift_apply(SpectralState(std::size_t{16}), paper_example_model(), basis);
    for (double v : out.coeffs()) EXPECT_EQ(v, 0.0);
}

TEST(Drift, RejectsUnderResolvedGrid) {
    const SineBasis basis(4, 4);
    EXPECT_THROW((void)drift_apply(SpectralState(std::size_t{5}), paper_example_model(), basis),
                 std::invalid_argument);
}

// Diffusion -------------------------------------------------------------------------

TEST(Diffusion, ZeroMapGivesZero) {
    const SineBasis basis(16, 8);
    const GridField u(basis.grid(), std::vector<double>(16, 1.0));
    const auto out = diffusion_apply(SpectralState(std::vector<double>(8, 1.0)), heat_model(), u, basis);
    for (double v : out.coeffs()) EXPECT_EQ(v, 0.0);
}

TEST(Diffusion, UnitMapReturnsNoiseCoefficients) {
    for_all(30, 23, [](Gen& g, std::size_t) {
        const std::size_t n = g.index(1, 16);
        const std::size_t j_modes = g.index(n, 40);
        const std::size_t mp = g.index(j_modes, 64);
        const SineBasis basis(mp, j_modes);
        const auto lat = generate_noise(j_modes, 3, 1.0, 9, g.index(0, 100));
        const auto u = increment_field(lat, 2, basis);
        const auto out = diffusion_apply(SpectralState(g.normals(n)), linear_additive_model(1.0), u, basis);
        for (std::size_t j = 1; j <= n; ++j) EXPECT_NEAR(out.coeff(j), lat(j, 2), 1e-14);
    });
}

TEST(Diffusion, PaperMapAtZeroState) {
    const SineBasis basis(64, 32);
    const auto lat = generate_noise(32, 1, 1.0, 4, 0);
    const auto u = increment_field(lat, 1, basis);
    const auto out = diffusion_apply(SpectralState(std::size_t{16}), paper_example_model(), u, basis);
    for (std::size_t j = 1; j <= 16; ++j) EXPECT_NEAR(out.coeff(j), lat(j, 1) / 8.0, 1e-15);
}

TEST(Diffusion, RejectsForeignGrid) {
    const SineBasis basis(8, 4);
    const GridField u(GridGeometry{9}, std::vector<double>(9, 0.0));
    EXPECT_THROW((void)diffusion_apply(SpectralState(std::size_t{4}), paper_example_model(), u, basis),
                 std::invalid_argument);
}

TEST(Diffusion, LinearInNoiseField) {
    for_all(30, 24, [](Gen& g, std::size_t) {
        const std::size_t n = g.index(1, 12);
        const std::size_t mp = 2 * n;
        const SineBasis basis(mp, n);
        const SpectralState s(g.normals(n, 0.3));
        const auto a = g.normals(mp);
        const auto b = g.normals(mp);
        const double alpha = g.uniform(-2, 2);
        std::vector<double> mix(mp);
        for (std::size_t m = 0; m < mp; ++m) mix[m] = a[m] + alpha * b[m];
        const auto m = paper_example_model();
        const auto ra = diffusion_apply(s, m, GridField(basis.grid(), a), basis);
        const auto rb = diffusion_apply(s, m, GridField(basis.grid(), b), basis);
        const auto rm = diffusion_apply(s, m, GridField(basis.grid(), mix), basis);
        for (std::size_t j = 1; j <= n; ++j) {
            EXPECT_NEAR(rm.coeff(j), ra.coeff(j) + alpha * rb.coeff(j), 1e-13);
        }
    });
}
