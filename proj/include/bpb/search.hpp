#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bpb/criterion.hpp"
#include "bpb/engine.hpp"
#include "bpb/error.hpp"
#include "bpb/perf.hpp"
#include "bpb/rng.hpp"
#include "bpb/space.hpp"

namespace bpb {

struct SearchConfig
{
    SpaceSpec space{2, 2};
    /// K: sample size per pass.
    int sample_size = 100;
    /// R: radius the schedule starts from.
    int initial_radius = 1;
    /// Lowest criterion value for a subset to stay in the search.
    double delta = 0.1;
    std::uint64_t seed = 1;
    std::uint64_t max_iterations = 10'000;
    std::uint64_t max_evaluations = 10'000'000;

    void validate() const
    {
        if (sample_size < 1)
            throw invalid_input("sample size K must be >= 1");
        if (initial_radius < 1 || initial_radius > space.n())
            throw invalid_input("initial radius R must lie in [1, n=" + std::to_string(space.n()) + "], got "
                                + std::to_string(initial_radius));
        if (!(delta > 0.0 && delta < 1.0))
            throw invalid_input("delta must lie in (0, 1), got " + std::to_string(delta));
        if (max_iterations < 1 || max_evaluations < 1)
            throw invalid_input("safety caps must be positive");
    }
};

/**
 * Evaluated points without duplicates, kept in insertion order. Ties on the
 * minimum value resolve to the earliest inserted point.
 */
class SamplePool
{
public:
    struct Entry
    {
        Point point;
        double value = 0.0;
        std::uint64_t order = 0;
    };

    /// Adds the point unless present. Returns true if it was new.
    bool insert(const Point& point, double value)
    {
        if (index_.contains(point))
            return false;
        index_.emplace(point, entries_.size());
        entries_.push_back({point, value, next_order_++});
        return true;
    }

    bool contains(const Point& point) const { return index_.contains(point); }

    std::optional<double> value_of(const Point& point) const
    {
        const auto it = index_.find(point);
        if (it == index_.end())
            return std::nullopt;
        return entries_[it->second].value;
    }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }

    /// Lowest-valued entry (earliest on ties). Pool must be non-empty.
    const Entry& best() const
    {
        if (entries_.empty())
            throw invalid_input("empty sample pool has no best point");
        std::size_t best = 0;
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (entries_[i].value < entries_[best].value)
                best = i;
        }
        return entries_[best];
    }

    /// Keeps only entries whose flag is set, preserving order.
    void retain(const std::vector<bool>& keep)
    {
        std::vector<Entry> kept;
        kept.reserve(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (keep[i])
                kept.push_back(std::move(entries_[i]));
        }
        entries_ = std::move(kept);
        index_.clear();
        for (std::size_t i = 0; i < entries_.size(); ++i)
            index_.emplace(entries_[i].point, i);
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<Point, std::size_t, PointHash> index_;
    std::uint64_t next_order_ = 0;
};

/// Current feasible set: the whole space, or a union of balls.
struct FeasibleSet
{
    bool whole = true;
    std::vector<Region> regions;

    bool contains(const Point& x) const
    {
        return whole || std::any_of(regions.begin(), regions.end(), [&](const Region& z) { return in_ball(z, x); });
    }
};

/// Regions Z_1..Z_k of one radius with their sampling probabilities.
struct Partition
{
    std::vector<Region> regions;
    std::vector<double> probabilities;
    /// Criterion values of the successive complements, one per region.
    std::vector<double> gammas;
};

/// Local-minimum test: radius 1 and every point of B_1(best) already in the pool.
inline bool stop_check(int radius, const Point& best, const SamplePool& pool, const SpaceSpec& space)
{
    if (radius != 1)
        return false;
    if (!pool.contains(best))
        return false;
    Point x = best;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int v = 1; v <= space.m(); ++v) {
            if (v == best[i])
                continue;
            x[i] = v;
            if (!pool.contains(x))
                return false;
        }
        x[i] = best[i];
    }
    return true;
}

/**
 * Reduction of the feasible set and its partition into balls.
 *
 * Repeatedly centers a ball of `radius` on the best pool point not yet
 * covered and scores the remaining part of the feasible set; stops once that
 * score falls below delta. On success the pool is restricted to the union of
 * the balls and the (unweighted) partition is returned. nullopt means the
 * uncovered part held fewer than 10 sample points: the sample has to be
 * expanded and the reduction retried; the pool is left untouched.
 */
inline std::optional<Partition> reduce_and_partition(SamplePool& pool, const FeasibleSet& feasible, int radius,
                                                     double delta, double alpha)
{
    if (pool.empty())
        throw invalid_input("reduction needs a non-empty pool");
    const double y_star = pool.best().value;
    const std::size_t size = pool.size();

    std::vector<bool> inside(size);
    for (std::size_t i = 0; i < size; ++i)
        inside[i] = feasible.contains(pool[i].point);
    std::vector<bool> covered(size, false);

    Partition partition;
    for (;;) {
        std::optional<std::size_t> next;
        for (std::size_t i = 0; i < size; ++i) {
            if (!covered[i] && (!next || pool[i].value < pool[*next].value))
                next = i;
        }
        if (!next)
            return std::nullopt;

        const Region ball{pool[*next].point, radius};
        partition.regions.push_back(ball);
        std::vector<double> rest;
        for (std::size_t i = 0; i < size; ++i) {
            if (!covered[i] && in_ball(ball, pool[i].point))
                covered[i] = true;
            if (inside[i] && !covered[i])
                rest.push_back(pool[i].value);
        }

        const auto k = select_k(rest.size());
        if (!k)
            return std::nullopt;
        const double gamma = *prospectiveness(OrderedSample(std::move(rest)), y_star, *k, alpha);
        partition.gammas.push_back(gamma);
        if (gamma < delta)
            break;
    }

    pool.retain(covered);
    return partition;
}

/**
 * Sampling probabilities for a partition. Region j scores q_j = criterion of
 * its pool points when it holds at least 10 of them, delta otherwise; all
 * zero scores become all ones; p_j = q_j / sum q.
 */
inline void reweight(Partition& partition, const SamplePool& pool, double delta, double alpha)
{
    if (partition.regions.empty())
        throw invalid_input("cannot weight an empty partition");
    const double y_star = pool.empty() ? 0.0 : pool.best().value;
    std::vector<double> q;
    q.reserve(partition.regions.size());
    for (const auto& region : partition.regions) {
        const auto score = criterion_over_pool(
            pool, [&](const Point& x) { return in_ball(region, x); }, y_star, alpha);
        q.push_back(score.value_or(delta));
    }
    if (std::all_of(q.begin(), q.end(), [](double v) { return v == 0.0; }))
        std::fill(q.begin(), q.end(), 1.0);
    const double sum = std::accumulate(q.begin(), q.end(), 0.0);
    partition.probabilities.clear();
    for (double v : q)
        partition.probabilities.push_back(v / sum);
}

/// Splits K draws over regions as K independent categorical trials.
inline std::vector<std::uint32_t> allocate_draws(std::span<const double> probabilities, std::uint32_t draws, Rng& rng)
{
    if (probabilities.empty())
        throw invalid_input("allocation needs at least one region");
    std::vector<double> cumulative(probabilities.size());
    std::partial_sum(probabilities.begin(), probabilities.end(), cumulative.begin());
    // Rounding can leave the total slightly below 1; overflow goes to the last region with mass.
    std::size_t last = 0;
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
        if (probabilities[j] > 0.0)
            last = j;
    }
    std::vector<std::uint32_t> counts(probabilities.size(), 0);
    for (std::uint32_t i = 0; i < draws; ++i) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto j = it == cumulative.end() ? last : static_cast<std::size_t>(it - cumulative.begin());
        ++counts[j];
    }
    return counts;
}

enum class StopReason { local_minimum_confirmed, max_iterations, max_evaluations };

inline std::string_view to_string(StopReason reason)
{
    switch (reason) {
    case StopReason::local_minimum_confirmed: return "local_minimum_confirmed";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::max_evaluations: return "max_evaluations";
    }
    return "unknown";
}

inline StopReason parse_stop_reason(std::string_view name)
{
    for (auto r : {StopReason::local_minimum_confirmed, StopReason::max_iterations, StopReason::max_evaluations}) {
        if (to_string(r) == name)
            return r;
    }
    throw invalid_input("unknown stop reason '" + std::string(name) + "'");
}

/// What happened in one sampling pass.
struct IterationTrace
{
    std::uint64_t iteration = 0;
    std::uint64_t pass = 0;
    /// Radius r_i of this iteration (0 while the first sample is still being grown).
    int radius = 0;
    /// The pass ended by asking for more samples instead of reducing.
    bool expansion = false;
    bool stopped = false;
    std::size_t pool_size = 0;
    double best_value = 0.0;
    double alpha = 0.0;
    /// Fresh sample of the pass, in logical draw order.
    std::vector<Evaluation> samples;
    /// New partition; empty unless a reduction completed.
    Partition partition;
    TimingLedger timing;
};

using TraceObserver = std::function<void(const IterationTrace&)>;

struct SearchResult
{
    Point best_point;
    double best_value = 0.0;
    std::uint64_t iterations = 0;
    std::uint64_t passes = 0;
    /// Sample points drawn (duplicates included).
    std::uint64_t evaluations = 0;
    double alpha = 0.0;
    StopReason stop_reason = StopReason::max_iterations;
    TimingLedger timing;
};

/// Tail shape used when the space holds fewer points than the estimator needs.
inline constexpr double fallback_alpha = 1.0;

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline std::uint32_t pass_key(std::uint64_t seed, std::uint64_t pass)
{
    return static_cast<std::uint32_t>(combine_seed(seed, pass) >> 32);
}

inline std::uint64_t allocation_seed(std::uint64_t seed, std::uint64_t pass)
{
    return combine_seed(combine_seed(seed, pass), 0x616c6c6f63ULL);
}

} // namespace detail

/**
 * Branch-and-probability-bound random search.
 *
 * The first iteration samples the whole space uniformly and fixes the tail
 * shape alpha. Each iteration then shrinks the radius by one down to 1,
 * stops once the best point and all its Hamming neighbours have been
 * evaluated, and otherwise reduces the feasible set to balls around the best
 * points and reweights sampling between them.
 *
 * When a reduction lacks the 10 points needed to score a complement, the
 * pass is repeated with the whole current pool kept and the radius of the
 * iteration unchanged. The first iteration is likewise repeated until the
 * pool holds the 100 points the alpha estimate needs (or the whole space).
 *
 * Sampling is delegated to `engine`; everything else runs on the calling
 * thread. Given the same seed the trace is identical for every engine.
 */
inline SearchResult run(const SearchConfig& config, SamplingEngine& engine, const TraceObserver& observer = {})
{
    config.validate();
    if (!(engine.space() == config.space))
        throw invalid_input("sampling engine space does not match the search space");

    const SpaceSpec& space = config.space;
    const auto cardinality = space.cardinality(64.0);
    const auto k_draws = static_cast<std::uint32_t>(config.sample_size);

    SamplePool pool;
    FeasibleSet feasible;
    Partition current{{Region{Point::filled(space.n(), 1), space.n()}}, {1.0}, {}};
    std::optional<double> alpha;
    int previous_radius = config.initial_radius;
    int radius = 0;
    bool radius_fixed = false;
    SearchResult result;
    result.iterations = 1;

    for (std::uint64_t pass = 0;; ++pass) {
        const auto pass_start = std::chrono::steady_clock::now();
        IterationTrace trace;
        trace.iteration = result.iterations;
        trace.pass = pass;

        // Sample and evaluate.
        SamplingPlan plan;
        plan.radius = feasible.whole ? space.n() : current.regions.front().radius;
        for (const auto& region : current.regions)
            plan.centers.push_back(region.center);
        if (current.regions.size() == 1) {
            plan.counts = {k_draws};
        } else {
            Rng allocation(detail::allocation_seed(config.seed, pass));
            plan.counts = allocate_draws(current.probabilities, k_draws, allocation);
        }
        plan.key = detail::pass_key(config.seed, pass);

        const auto sample_start = std::chrono::steady_clock::now();
        SamplingOutcome outcome = engine.sample(plan);
        const double sample_wall = detail::elapsed_ms(sample_start);
        trace.timing.comm_ms = outcome.comm_ms;
        trace.timing.sample_ms = std::max(0.0, sample_wall - outcome.comm_ms);
        trace.timing.points = outcome.evaluations.size();
        result.evaluations += outcome.evaluations.size();

        for (const auto& e : outcome.evaluations)
            pool.insert(e.point, e.value);
        const auto& best = pool.best();
        result.best_point = best.point;
        result.best_value = best.value;

        auto finish_pass = [&] {
            trace.pool_size = pool.size();
            trace.best_value = result.best_value;
            trace.alpha = alpha.value_or(0.0);
            trace.radius = radius;
            trace.samples = std::move(outcome.evaluations);
            trace.timing.algorithm_ms = std::max(0.0, detail::elapsed_ms(pass_start) - sample_wall);
            result.timing += trace.timing;
            result.passes = pass + 1;
            if (observer)
                observer(trace);
        };
        auto stop = [&](StopReason reason) {
            result.stop_reason = reason;
            result.alpha = alpha.value_or(0.0);
            trace.stopped = true;
            finish_pass();
            return result;
        };
        auto caps_hit = [&]() -> std::optional<StopReason> {
            if (result.evaluations >= config.max_evaluations)
                return StopReason::max_evaluations;
            if (result.iterations >= config.max_iterations)
                return StopReason::max_iterations;
            return std::nullopt;
        };

        // Tail shape, once, from the first iteration's sample.
        if (!alpha) {
            alpha = estimate_alpha(OrderedSample([&] {
                std::vector<double> v;
                for (const auto& e : pool)
                    v.push_back(e.value);
                return v;
            }()));
            if (!alpha) {
                const bool saturated = cardinality && pool.size() >= *cardinality;
                if (!saturated) {
                    if (auto reason = caps_hit())
                        return stop(*reason);
                    trace.expansion = true;
                    finish_pass();
                    continue;
                }
                alpha = fallback_alpha;
            }
        }

        if (!radius_fixed) {
            radius = std::max(previous_radius - 1, 1);
            radius_fixed = true;
        }

        if (stop_check(radius, result.best_point, pool, space))
            return stop(StopReason::local_minimum_confirmed);
        if (auto reason = caps_hit())
            return stop(*reason);

        auto partition = reduce_and_partition(pool, feasible, radius, config.delta, *alpha);
        if (!partition) {
            trace.expansion = true;
            finish_pass();
            continue;
        }
        reweight(*partition, pool, config.delta, *alpha);

        feasible.whole = false;
        feasible.regions = partition->regions;
        current = *partition;
        trace.partition = std::move(*partition);
        finish_pass();

        previous_radius = radius;
        radius_fixed = false;
        ++result.iterations;
    }
}

} // namespace bpb
