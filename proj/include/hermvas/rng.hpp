#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace hermvas::rng {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

/// Derive a child seed from a master seed and a list of integer tags
/// (horizon index, replication, stream id, ...). Order of tags matters.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) noexcept
{
    std::uint64_t h = mix64(master ^ 0x6A09E667F3BCC909ULL);
    for (std::uint64_t t : tags) {
        h = mix64(h + golden_gamma + mix64(t + 0x3C6EF372FE94F82BULL));
    }
    return h;
}

/**
 * Counter-based 64-bit stream: the i-th output is mix64(key + (i+1)*gamma).
 *
 * Output depends only on (seed, position), so a stream can be skipped to any
 * position and the sequence is identical on every platform.
 */
class CounterStream {
public:
    explicit constexpr CounterStream(std::uint64_t seed) noexcept
        : key_(mix64(seed)) {}

    constexpr std::uint64_t next() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * golden_gamma);
    }

    constexpr void skip(std::uint64_t n) noexcept { counter_ += n; }
    constexpr std::uint64_t position() const noexcept { return counter_; }

    /// Uniform on (0, 1), 53-bit resolution; never returns 0 or 1.
    double uniform_open() noexcept
    {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Standard normal variates by Box-Muller over a CounterStream.
/// Only log, sqrt, sin and cos are used, so values agree across libm
/// implementations to within their ulp guarantees.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) noexcept : uniforms_(seed) {}

    double operator()() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniforms_.uniform_open();
        const double u2 = uniforms_.uniform_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <class It>
    void fill(It first, It last) noexcept
    {
        for (; first != last; ++first) *first = (*this)();
    }

private:
    CounterStream uniforms_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hermvas::rng
