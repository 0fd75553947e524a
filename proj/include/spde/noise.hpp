#pragma once

// Brownian increments of the truncated cylindrical Wiener process
//
//   W(t, x) = sum_{j <= J} e_j(x) beta_j(t)
//
// on a fine time grid, with exact coarsening (block sums) and mode truncation
// (row prefix) so runs at different resolutions share the same paths.
//
// Draws come from Philox4x32-10 keyed by the master seed, with the counter
// built from (step pair, mode, sample index); any entry can be regenerated
// independently of evaluation order.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spde/error.hpp"
#include "spde/spectral.hpp"

namespace spde {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    [[nodiscard]] static constexpr Counter generate(Counter ctr, Key key) noexcept {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

namespace detail {

// Uniform in the open interval (0, 1): (b + 1/2) 2^-52 for the top 52 bits b,
// so the extremes are 2^-53 and 1 - 2^-53.
constexpr double open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

// Two standard normals (Box-Muller) for counter (pair, mode, sample).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t sample,
                                         std::uint64_t mode, std::uint64_t pair) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(mode),
                                  static_cast<std::uint32_t>(sample),
                                  static_cast<std::uint32_t>(sample >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const auto r = Philox4x32::generate(ctr, key);
    const double u1 = open_unit(r[0], r[1]);
    const double u2 = open_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

} // namespace detail

/// J x K matrix of increments Delta beta_j(t_k), stored row-major (row = mode).
/// Immutable; mode truncation shares storage with the parent.
class NoiseLattice {
public:
    NoiseLattice(std::size_t modes, std::size_t steps, double horizon, std::uint64_t seed,
                 std::uint64_t sample_index, std::vector<double> increments)
        : NoiseLattice(modes, steps, horizon, seed, sample_index,
                       std::make_shared<const std::vector<double>>(std::move(increments))) {}

    [[nodiscard]] std::size_t modes() const noexcept { return modes_; }
    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] double tau() const noexcept { return horizon_ / static_cast<double>(steps_); }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t sample_index() const noexcept { return sample_index_; }

    /// Delta beta_j over step k; both 1-based.
    [[nodiscard]] double operator()(std::size_t j, std::size_t k) const noexcept {
        return (*data_)[(j - 1) * steps_ + (k - 1)];
    }

    /// Increments of mode j across all steps.
    [[nodiscard]] std::span<const double> row(std::size_t j) const noexcept {
        return {data_->data() + (j - 1) * steps_, steps_};
    }

    /// Increments of modes 1..modes() over step k, written into out.
    void column(std::size_t k, std::span<double> out) const {
        if (k == 0 || k > steps_) throw std::out_of_range("NoiseLattice::column: step out of range");
        if (out.size() != modes_) throw std::invalid_argument("NoiseLattice::column: size mismatch");
        for (std::size_t j = 1; j <= modes_; ++j) out[j - 1] = (*this)(j, k);
    }

    friend bool operator==(const NoiseLattice& a, const NoiseLattice& b) {
        if (a.modes_ != b.modes_ || a.steps_ != b.steps_ || a.horizon_ != b.horizon_ ||
            a.seed_ != b.seed_ || a.sample_index_ != b.sample_index_) {
            return false;
        }
        for (std::size_t j = 1; j <= a.modes_; ++j) {
            const auto ra = a.row(j);
            const auto rb = b.row(j);
            if (std::memcmp(ra.data(), rb.data(), ra.size_bytes()) != 0) return false;
        }
        return true;
    }

    /// Keeps modes 1..n. The retained rows are the parent's draws.
    [[nodiscard]] NoiseLattice truncate_modes(std::size_t n) const {
        if (n == 0 || n > modes_) {
            throw std::invalid_argument("truncate_modes: requested modes outside [1, J]");
        }
        return NoiseLattice(n, steps_, horizon_, seed_, sample_index_, data_);
    }

private:
    NoiseLattice(std::size_t modes, std::size_t steps, double horizon, std::uint64_t seed,
                 std::uint64_t sample_index, std::shared_ptr<const std::vector<double>> data)
        : modes_(modes), steps_(steps), horizon_(horizon), seed_(seed),
          sample_index_(sample_index), data_(std::move(data)) {
        if (modes_ == 0 || steps_ == 0) throw std::invalid_argument("NoiseLattice: empty lattice");
        if (!(horizon_ > 0.0)) throw std::invalid_argument("NoiseLattice: horizon must be positive");
        if (data_->size() < modes_ * steps_) throw std::invalid_argument("NoiseLattice: short payload");
    }

    std::size_t modes_;
    std::size_t steps_;
    double horizon_;
    std::uint64_t seed_;
    std::uint64_t sample_index_;
    std::shared_ptr<const std::vector<double>> data_;
};

/// i.i.d. Normal(0, T/K) increments for modes 1..J and steps 1..K, keyed by
/// (seed, sample_index). Deterministic.
[[nodiscard]] inline NoiseLattice generate_noise(std::size_t modes, std::size_t steps, double horizon,
                                                 std::uint64_t seed, std::uint64_t sample_index) {
    if (modes == 0 || steps == 0) throw std::invalid_argument("generate_noise: empty lattice");
    if (!(horizon > 0.0)) throw std::invalid_argument("generate_noise: horizon must be positive");
    if (modes > 0xFFFFFFFFull || (steps + 1) / 2 > 0xFFFFFFFFull) {
        throw std::invalid_argument("generate_noise: lattice exceeds counter range");
    }
    const double sd = std::sqrt(horizon / static_cast<double>(steps));
    std::vector<double> data(modes * steps);
    for (std::size_t j = 1; j <= modes; ++j) {
        double* row = data.data() + (j - 1) * steps;
        for (std::size_t p = 0; 2 * p < steps; ++p) {
            const auto z = detail::normal_pair(seed, sample_index, j, p);
            row[2 * p] = sd * z[0];
            if (2 * p + 1 < steps) row[2 * p + 1] = sd * z[1];
        }
    }
    return NoiseLattice(modes, steps, horizon, seed, sample_index, std::move(data));
}

namespace detail {

// One level: sums of `factor` consecutive entries, added left to right.
inline std::vector<double> block_sums(std::span<const double> in, std::size_t modes, std::size_t steps,
                                      std::size_t factor) {
    const std::size_t coarse = steps / factor;
    std::vector<double> out(modes * coarse);
    for (std::size_t j = 0; j < modes; ++j) {
        const double* r = in.data() + j * steps;
        double* o = out.data() + j * coarse;
        for (std::size_t k = 0; k < coarse; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < factor; ++i) s += r[k * factor + i];
            o[k] = s;
        }
    }
    return out;
}

inline std::vector<std::size_t> prime_factors(std::size_t n) {
    std::vector<std::size_t> p;
    for (std::size_t d = 2; d * d <= n; ++d) {
        while (n % d == 0) {
            p.push_back(d);
            n /= d;
        }
    }
    if (n > 1) p.push_back(n);
    return p;
}

} // namespace detail

/// Block sums of `factor` consecutive steps. The sums are formed one level per
/// prime factor of `factor`, smallest first, each level adding left to right.
/// Hence coarsen_time(coarsen_time(x, a), b) == coarsen_time(x, a * b) bit for
/// bit whenever no prime of a exceeds a prime of b (always, for powers of 2).
[[nodiscard]] inline NoiseLattice coarsen_time(const NoiseLattice& fine, std::size_t factor) {
    if (factor == 0 || fine.steps() % factor != 0) {
        throw std::invalid_argument("coarsen_time: factor must divide the step count");
    }
    const std::size_t modes = fine.modes();
    std::size_t steps = fine.steps();
    std::vector<double> data(modes * steps);
    for (std::size_t j = 1; j <= modes; ++j) {
        const auto r = fine.row(j);
        std::copy(r.begin(), r.end(), data.begin() + static_cast<std::ptrdiff_t>((j - 1) * steps));
    }
    for (std::size_t p : detail::prime_factors(factor)) {
        data = detail::block_sums(data, modes, steps, p);
        steps /= p;
    }
    return NoiseLattice(modes, steps, fine.horizon(), fine.seed(), fine.sample_index(), std::move(data));
}

/// W(t_k) - W(t_{k-1}) on the basis grid: sum_j sqrt(2) sin(j pi x_m) Delta beta_j,k.
/// Boundary values are 0.
[[nodiscard]] inline GridField increment_field(const NoiseLattice& lattice, std::size_t k,
                                               const SineBasis& basis) {
    if (k == 0 || k > lattice.steps()) throw std::out_of_range("increment_field: step out of range");
    detail::require_rows(basis, lattice.modes(), "increment_field");
    std::vector<double> col(lattice.modes());
    lattice.column(k, col);
    std::vector<double> v(basis.m_points());
    detail::synthesize_into(col, basis, v);
    return GridField(basis.grid(), std::move(v), BoundaryValues{0.0, 0.0});
}

// Binary dump: five little-endian 64-bit header fields (J, K, T as IEEE-754
// bits, seed, sample index), then J*K little-endian doubles, row-major.

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (!is) throw IoError("noise lattice: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace detail

inline void dump_lattice(const NoiseLattice& lattice, std::ostream& os) {
    detail::put_u64(os, lattice.modes());
    detail::put_u64(os, lattice.steps());
    detail::put_u64(os, std::bit_cast<std::uint64_t>(lattice.horizon()));
    detail::put_u64(os, lattice.seed());
    detail::put_u64(os, lattice.sample_index());
    for (std::size_t j = 1; j <= lattice.modes(); ++j) {
        for (double x : lattice.row(j)) detail::put_u64(os, std::bit_cast<std::uint64_t>(x));
    }
    if (!os) throw IoError("noise lattice: write failed");
}

[[nodiscard]] inline NoiseLattice load_lattice(std::istream& is) {
    const auto modes = detail::get_u64(is);
    const auto steps = detail::get_u64(is);
    const auto horizon = std::bit_cast<double>(detail::get_u64(is));
    const auto seed = detail::get_u64(is);
    const auto sample = detail::get_u64(is);
    if (modes == 0 || steps == 0 || modes > (1ull << 32) || steps > (1ull << 40) ||
        modes * steps > (1ull << 34)) {
        throw IoError("noise lattice: implausible header");
    }
    std::vector<double> data(modes * steps);
    for (auto& x : data) x = std::bit_cast<double>(detail::get_u64(is));
    return NoiseLattice(modes, steps, horizon, seed, sample, std::move(data));
}

inline void dump_lattice(const NoiseLattice& lattice, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path);
    dump_lattice(lattice, os);
}

[[nodiscard]] inline NoiseLattice load_lattice(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return load_lattice(is);
}

} // namespace spde
