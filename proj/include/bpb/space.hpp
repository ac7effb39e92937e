#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bpb/error.hpp"
#include "bpb/rng.hpp"

namespace bpb {

using BigCount = boost::multiprecision::cpp_int;

/// The feasible set {1..m}^n.
class SpaceSpec
{
public:
    SpaceSpec(int n, int m) : n_(n), m_(m)
    {
        if (n < 1)
            throw invalid_input("space dimension n must be >= 1, got " + std::to_string(n));
        if (m < 2)
            throw invalid_input("alphabet size m must be >= 2, got " + std::to_string(m));
    }

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }

    /// Natural log of m^n.
    double log_cardinality() const { return n_ * std::log(static_cast<double>(m_)); }

    /// m^n exactly, or nullopt when it would need more than max_bits bits.
    std::optional<BigCount> cardinality(double max_bits = 65536.0) const
    {
        if (n_ * std::log2(static_cast<double>(m_)) > max_bits)
            return std::nullopt;
        return boost::multiprecision::pow(BigCount(m_), static_cast<unsigned>(n_));
    }

    friend bool operator==(const SpaceSpec&, const SpaceSpec&) = default;

private:
    int n_;
    int m_;
};

/// A candidate solution: n coordinates, each in [1, m].
class Point
{
public:
    Point() = default;
    explicit Point(std::vector<int> coords) : coords_(std::move(coords)) {}
    Point(std::initializer_list<int> coords) : coords_(coords) {}

    /// The constant vector (value, ..., value).
    static Point filled(int n, int value) { return Point(std::vector<int>(static_cast<std::size_t>(n), value)); }

    std::size_t size() const noexcept { return coords_.size(); }
    int operator[](std::size_t i) const { return coords_[i]; }
    int& operator[](std::size_t i) { return coords_[i]; }
    std::span<const int> coords() const noexcept { return coords_; }

    auto begin() const noexcept { return coords_.begin(); }
    auto end() const noexcept { return coords_.end(); }

    bool valid_for(const SpaceSpec& space) const
    {
        return static_cast<int>(coords_.size()) == space.n()
            && std::all_of(coords_.begin(), coords_.end(), [&](int c) { return c >= 1 && c <= space.m(); });
    }

    /// Space-separated coordinates, e.g. "1 2 3".
    std::string to_string() const
    {
        std::string out;
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            if (i)
                out += ' ';
            out += std::to_string(coords_[i]);
        }
        return out;
    }

    friend bool operator==(const Point&, const Point&) = default;
    friend auto operator<=>(const Point&, const Point&) = default;

private:
    std::vector<int> coords_;
};

struct PointHash
{
    std::size_t operator()(const Point& p) const noexcept
    {
        std::uint64_t h = p.size();
        for (int c : p)
            h = combine_seed(h, static_cast<std::uint64_t>(c));
        return static_cast<std::size_t>(h);
    }
};

/// Hamming ball B_radius(center).
struct Region
{
    Point center;
    int radius = 0;

    friend bool operator==(const Region&, const Region&) = default;
};

namespace detail {

inline void require_same_size(const Point& x, const Point& y)
{
    if (x.size() != y.size())
        throw invalid_input("dimension mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
}

inline void require_radius(const SpaceSpec& space, int radius)
{
    if (radius < 0 || radius > space.n())
        throw invalid_input("radius " + std::to_string(radius) + " outside [0, " + std::to_string(space.n()) + "]");
}

inline void require_point(const SpaceSpec& space, const Point& p)
{
    if (!p.valid_for(space))
        throw invalid_input("point (" + p.to_string() + ") is not in {1.." + std::to_string(space.m()) + "}^"
                            + std::to_string(space.n()));
}

} // namespace detail

/// Number of coordinates where x and y differ.
inline int hamming_distance(const Point& x, const Point& y)
{
    detail::require_same_size(x, y);
    int d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d += x[i] != y[i];
    return d;
}

/// Hamming distance with early exit once it exceeds limit; returns limit + 1 in that case.
inline int hamming_distance_bounded(const Point& x, const Point& y, int limit) noexcept
{
    int d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != y[i] && ++d > limit)
            return limit + 1;
    }
    return d;
}

inline int chebyshev_distance(const Point& x, const Point& y)
{
    detail::require_same_size(x, y);
    int d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d = std::max(d, std::abs(x[i] - y[i]));
    return d;
}

inline int manhattan_distance(const Point& x, const Point& y)
{
    detail::require_same_size(x, y);
    int d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d += std::abs(x[i] - y[i]);
    return d;
}

inline bool in_ball(const Region& region, const Point& x) noexcept
{
    return hamming_distance_bounded(region.center, x, region.radius) <= region.radius;
}

/// |S_i| = (m-1)^i * C(n, i), exact.
inline BigCount sphere_count(const SpaceSpec& space, int i)
{
    detail::require_radius(space, i);
    BigCount binom = 1;
    for (int k = 0; k < i; ++k)
        binom = binom * (space.n() - k) / (k + 1);
    return binom * boost::multiprecision::pow(BigCount(space.m() - 1), static_cast<unsigned>(i));
}

/// |B_r| = sum of sphere counts for radii 0..r, exact.
inline BigCount ball_count(const SpaceSpec& space, int r)
{
    detail::require_radius(space, r);
    BigCount total = 0;
    BigCount sphere = 1;
    for (int i = 0; i <= r; ++i) {
        total += sphere;
        // (m-1)^(i+1) C(n, i+1) = (m-1)^i C(n, i) * (m-1)(n-i) / (i+1), exact division.
        sphere = sphere * (space.m() - 1) * (space.n() - i) / (i + 1);
    }
    return total;
}

/**
 * Cumulative sphere-selection probabilities for balls of one radius.
 *
 * P_i = (N_0 + ... + N_i) / (N_0 + ... + N_r), formed from exact integer
 * counts. Both numerator and denominator are shifted right by the same
 * number of bits so the denominator fits a 64-bit long double mantissa; the
 * ratio is then accurate to about 2^-63 and P_r is exactly 1.
 */
class SphereRadiusTable
{
public:
    SphereRadiusTable(const SpaceSpec& space, int r)
    {
        detail::require_radius(space, r);
        std::vector<BigCount> cumulative;
        cumulative.reserve(static_cast<std::size_t>(r) + 1);
        BigCount total = 0;
        BigCount sphere = 1;
        for (int i = 0; i <= r; ++i) {
            total += sphere;
            cumulative.push_back(total);
            sphere = sphere * (space.m() - 1) * (space.n() - i) / (i + 1);
        }
        const std::size_t bits = boost::multiprecision::msb(total) + 1;
        const std::size_t shift = bits > 64 ? bits - 64 : 0;
        const auto denominator = static_cast<long double>(static_cast<std::uint64_t>(total >> shift));
        cumulative_.reserve(cumulative.size());
        for (const auto& c : cumulative)
            cumulative_.push_back(static_cast<long double>(static_cast<std::uint64_t>(c >> shift)) / denominator);
        cumulative_.back() = 1.0L;
    }

    int radius() const noexcept { return static_cast<int>(cumulative_.size()) - 1; }
    std::span<const long double> cumulative() const noexcept { return cumulative_; }

    /// Smallest i with P_i >= u.
    int select(long double u) const
    {
        const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        return static_cast<int>(it - cumulative_.begin());
    }

    int sample(Rng& rng) const { return select(rng.uniform01_extended()); }

private:
    std::vector<long double> cumulative_;
};

/// Radius of the sphere to sample from inside B_r, with probability N_j / |B_r|.
inline int sample_sphere_radius(const SpaceSpec& space, int r, Rng& rng)
{
    return SphereRadiusTable(space, r).sample(rng);
}

/// Uniform point at Hamming distance exactly `radius` from center.
inline Point sample_on_sphere(const SpaceSpec& space, const Point& center, int radius, Rng& rng)
{
    detail::require_radius(space, radius);
    Point x = center;
    if (radius == 0)
        return x;
    std::vector<int> free_index(static_cast<std::size_t>(space.n()));
    std::iota(free_index.begin(), free_index.end(), 0);
    for (int t = 0; t < radius; ++t) {
        // Partial Fisher-Yates: positions [t, n) hold the indices not yet drawn.
        const auto pick = static_cast<std::size_t>(t) + rng.below(static_cast<std::uint64_t>(space.n() - t));
        std::swap(free_index[static_cast<std::size_t>(t)], free_index[pick]);
        const auto j = static_cast<std::size_t>(free_index[static_cast<std::size_t>(t)]);
        // Uniform over {1..m} \ {z_j}.
        int value = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(space.m() - 1)));
        if (value >= center[j])
            ++value;
        x[j] = value;
    }
    return x;
}

inline Point sample_uniform_space(const SpaceSpec& space, Rng& rng)
{
    std::vector<int> coords(static_cast<std::size_t>(space.n()));
    for (auto& c : coords)
        c = rng.uniform_int(1, space.m());
    return Point(std::move(coords));
}

/// Uniform point in B_r(center): sphere radius first, then a point on that sphere.
inline Point sample_ball(const SpaceSpec& space, const Point& center, int r, Rng& rng)
{
    const int radius = sample_sphere_radius(space, r, rng);
    return sample_on_sphere(space, center, radius, rng);
}

/**
 * Ball sampler with per-radius probability tables cached. One instance per
 * execution context; not thread-safe.
 *
 * draw() treats radius == n as the whole space and samples coordinates
 * directly, which has the same (uniform) distribution as the two-stage
 * procedure on B_n.
 */
class BallSampler
{
public:
    explicit BallSampler(SpaceSpec space) : space_(space) {}

    const SpaceSpec& space() const noexcept { return space_; }

    Point sample(const Point& center, int r, Rng& rng)
    {
        return sample_on_sphere(space_, center, table(r).sample(rng), rng);
    }

    Point draw(const Point& center, int r, Rng& rng)
    {
        if (r >= space_.n())
            return sample_uniform_space(space_, rng);
        return sample(center, r, rng);
    }

    const SphereRadiusTable& table(int r)
    {
        auto it = tables_.find(r);
        if (it == tables_.end())
            it = tables_.emplace(r, SphereRadiusTable(space_, r)).first;
        return it->second;
    }

private:
    SpaceSpec space_;
    std::map<int, SphereRadiusTable> tables_;
};

inline constexpr std::size_t default_enumeration_cap = 1'000'000;

/// All points of B_r(center), in lexicographic order of the changed-coordinate pattern.
inline std::vector<Point> enumerate_ball(const SpaceSpec& space, const Point& center, int r,
                                         std::size_t cap = default_enumeration_cap)
{
    detail::require_radius(space, r);
    detail::require_point(space, center);
    if (ball_count(space, r) > cap)
        throw cap_exceeded("ball of radius " + std::to_string(r) + " exceeds the enumeration cap of "
                           + std::to_string(cap) + " points");

    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(ball_count(space, r)));
    Point x = center;
    const auto n = static_cast<std::size_t>(space.n());
    std::function<void(std::size_t, int)> visit = [&](std::size_t i, int budget) {
        if (i == n) {
            out.push_back(x);
            return;
        }
        visit(i + 1, budget);
        if (budget == 0)
            return;
        for (int v = 1; v <= space.m(); ++v) {
            if (v == center[i])
                continue;
            x[i] = v;
            visit(i + 1, budget - 1);
        }
        x[i] = center[i];
    };
    visit(0, r);
    return out;
}

} // namespace bpb
