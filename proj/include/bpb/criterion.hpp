#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpb/error.hpp"

namespace bpb {

/// Smallest sample the prospectiveness criterion accepts.
inline constexpr std::size_t min_criterion_sample = 10;
/// Smallest sample the tail-shape estimator accepts.
inline constexpr std::size_t min_alpha_sample = 100;
inline constexpr double alpha_min = 0.1;
inline constexpr double alpha_max = 10.0;

/// Objective values sorted ascending: y_(1) <= ... <= y_(N).
class OrderedSample
{
public:
    OrderedSample() = default;

    explicit OrderedSample(std::vector<double> values) : values_(std::move(values))
    {
        std::sort(values_.begin(), values_.end());
    }

    std::size_t count() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    /// 1-based order statistic y_(i).
    double order(std::size_t i) const { return values_.at(i - 1); }

    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

struct CriterionParams
{
    int k = 1;
    double alpha = 1.0;
    double delta = 0.1;

    void validate() const
    {
        if (k < 1)
            throw invalid_input("criterion k must be >= 1");
        if (!(alpha > 0.0))
            throw invalid_input("criterion alpha must be positive");
        if (!(delta > 0.0 && delta < 1.0))
            throw invalid_input("delta must lie in (0, 1), got " + std::to_string(delta));
    }
};

/**
 * Order-statistic count used by the criterion for a subset of N sample points:
 * floor(N/10) below 100 points, 10 from there on. nullopt when N < 10, which
 * means the sample has to be expanded before the criterion can be evaluated.
 */
constexpr std::optional<int> select_k(std::size_t n) noexcept
{
    if (n < min_criterion_sample)
        return std::nullopt;
    if (n < 100)
        return static_cast<int>(n / 10);
    return 10;
}

/**
 * Prospectiveness of a subset: (1 - ((y_(1) - y*) / (y_(k+1) - y*))^alpha)^k.
 *
 * y_star is the record value over the whole sample, so y_star <= y_(1).
 * Returns nullopt when the subset has at most k values. A zero denominator
 * (y_(k+1) = y*, hence y_(1) = y*) yields 1.
 */
inline std::optional<double> prospectiveness(const OrderedSample& sub, double y_star, int k, double alpha)
{
    if (k < 1)
        throw invalid_input("criterion k must be >= 1");
    if (!(alpha > 0.0))
        throw invalid_input("criterion alpha must be positive");
    if (sub.count() <= static_cast<std::size_t>(k))
        return std::nullopt;

    const double lowest = sub.order(1);
    const double spread = sub.order(static_cast<std::size_t>(k) + 1) - y_star;
    if (spread <= 0.0)
        return 1.0;
    const double ratio = std::clamp((lowest - y_star) / spread, 0.0, 1.0);
    const double value = std::pow(1.0 - std::pow(ratio, alpha), k);
    return std::clamp(value, 0.0, 1.0);
}

/**
 * Tail-shape estimate ln 5 / ln((y_(11) - y_(1)) / (y_(3) - y_(1))) from the
 * full first-iteration sample, clamped to [alpha_min, alpha_max].
 *
 * y_(3) = y_(1) gives alpha_max; a ratio of at most 1 (ties at y_(3) and
 * y_(11)) gives alpha_min. nullopt when fewer than 100 values are available.
 */
inline std::optional<double> estimate_alpha(const OrderedSample& full)
{
    if (full.count() < min_alpha_sample)
        return std::nullopt;
    const double near = full.order(3) - full.order(1);
    const double far = full.order(11) - full.order(1);
    if (near <= 0.0)
        return alpha_max;
    const double ratio = far / near;
    if (ratio <= 1.0)
        return alpha_min;
    return std::clamp(std::log(5.0) / std::log(ratio), alpha_min, alpha_max);
}

/**
 * Criterion over the members of a pool selected by `member`.
 *
 * Pool is any range of entries exposing `.point` and `.value`. The subset
 * size picks k through select_k; nullopt propagates when the subset holds
 * fewer than 10 points.
 */
template <class Pool, class Predicate>
std::optional<double> criterion_over_pool(const Pool& pool, Predicate&& member, double y_star, double alpha)
{
    std::vector<double> values;
    for (const auto& entry : pool) {
        if (member(entry.point))
            values.push_back(entry.value);
    }
    const auto k = select_k(values.size());
    if (!k)
        return std::nullopt;
    return prospectiveness(OrderedSample(std::move(values)), y_star, *k, alpha);
}

} // namespace bpb
