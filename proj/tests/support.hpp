#pragma once

// Test-side generators and oracles. Nothing here calls into the library, so
// the oracles stay independent of the code under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace testing_support {

inline constexpr double kPi = 3.14159265358979323846;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    std::vector<double> normals(std::size_t n, double scale = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = scale * normal();
        return v;
    }
    /// Coefficients with a decaying envelope, typical of solution states.
    std::vector<double> decaying(std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t j = 0; j < n; ++j) v[j] = normal() / static_cast<double>(j + 1);
        return v;
    }

private:
    std::mt19937_64 rng_;
};

/// Runs `prop(gen, case)` for `cases` generated cases; failures name the case.
template <class Prop>
void for_all(std::size_t cases, std::uint64_t seed, Prop&& prop) {
    Gen gen(seed);
    for (std::size_t c = 0; c < cases; ++c) {
        SCOPED_TRACE("generated case " + std::to_string(c));
        prop(gen, c);
        if (::testing::Test::HasFatalFailure()) return;
    }
}

/// Composite Simpson rule on [a, b] with 2n panels, in long double.
template <class Fn>
double simpson(Fn&& f, double a, double b, std::size_t n = 20000) {
    const long double h = (static_cast<long double>(b) - a) / (2.0L * static_cast<long double>(n));
    long double s = f(a) + f(b);
    for (std::size_t i = 1; i < 2 * n; ++i) {
        const double x = static_cast<double>(a + static_cast<long double>(i) * h);
        s += (i % 2 ? 4.0L : 2.0L) * f(x);
    }
    return static_cast<double>(s * h / 3.0L);
}

/// sqrt(2) sin(j pi x) evaluated in long double.
inline double sine_mode(std::size_t j, double x) {
    return static_cast<double>(std::sqrt(2.0L) * std::sin(static_cast<long double>(j) * kPi * x));
}

/// x_m = m / (M + 1) on the interior grid.
inline double node(std::size_t m, std::size_t m_points) {
    return static_cast<double>(m) / static_cast<double>(m_points + 1);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace testing_support
