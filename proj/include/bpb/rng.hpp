#pragma once

#include <cstdint>
#include <random>

namespace bpb {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive combination of two 64-bit keys.
constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) noexcept
{
    return mix64(seed ^ mix64(value + 0x632be59bd9b4e019ULL));
}

/**
 * Deterministic pseudo-random stream.
 *
 * The engine is std::mt19937_64 seeded with a single 64-bit value. Bounded
 * integers use rejection sampling on raw 64-bit outputs and reals use the top
 * 53 bits, so a stream is bit-reproducible across standard libraries (the
 * std:: distribution adaptors are implementation-defined and are not used).
 */
class Rng
{
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound)
    {
        // Largest multiple of bound that fits; draws at or above it are rejected.
        const std::uint64_t limit = max() - (max() % bound + 1) % bound;
        std::uint64_t x = engine_();
        while (x > limit)
            x = engine_();
        return x % bound;
    }

    /// Uniform integer in the closed range [lo, hi].
    int uniform_int(int lo, int hi)
    {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform real in [0, 1) with 64 random bits.
    long double uniform01_extended()
    {
        return static_cast<long double>(engine_()) * 0x1.0p-64L;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace bpb
