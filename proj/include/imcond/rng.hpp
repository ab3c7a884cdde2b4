#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (master_seed, stream_index, counter), so a
// replication can be regenerated in isolation and results do not depend on
// which thread ran which replication. The block cipher is Philox4x32-10
// (Salmon et al., SC'11); the 64-bit master seed is the key and the stream
// index occupies the upper half of the 128-bit counter.
//
// Variate generators are written out here instead of using <random>
// distributions, whose algorithms are implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "imcond/error.hpp"

namespace imcond {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    const std::uint64_t p0 = m0 * ctr[0];
    const std::uint64_t p1 = m1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

} // namespace detail

/// Philox4x32-10 block function.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        detail::philox_round(ctr, key);
        if (r < 9) {
            key[0] += w0;
            key[1] += w1;
        }
    }
    return ctr;
}

/// Reproducible random stream keyed by (master_seed, stream_index).
///
/// Satisfies UniformRandomBitGenerator so it can drive standard algorithms,
/// but the variate methods below are the ones the library relies on.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : seed_(master_seed), stream_(stream_index) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    std::uint64_t master_seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return stream_; }

    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64() {
        if (lane_ == 2) refill();
        return buffer_[lane_++];
    }

    /// Uniform on the open interval (0,1) with 53 random bits.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate of each pair is kept.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Gamma(shape, 1) by Marsaglia & Tsang; shape < 1 uses the u^{1/a} boost.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            return g * std::pow(uniform(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chisq(double df) { return 2.0 * gamma(0.5 * df); }

    double student_t(double df) { return normal() / std::sqrt(chisq(df) / df); }

    double exponential(double mean = 1.0) { return -mean * std::log(uniform()); }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                                  static_cast<std::uint32_t>(seed_ >> 32)};
        const auto out = philox4x32_10(ctr, key);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++counter_;
        lane_ = 0;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int lane_ = 2;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace imcond
