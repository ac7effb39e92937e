#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "bpb/objectives.hpp"
#include "bpb/rng.hpp"
#include "bpb/space.hpp"

namespace bpb {

/**
 * Seed lane carried by a sample request.
 *
 * Bits 63..32 hold the key of the sampling pass, bits 31..16 the worker's
 * offset and bits 15..0 the stride (worker count, 1 for serial sampling).
 * A worker serving task t draws the logical draws offset, offset + stride,
 * offset + 2 stride, ... of that task's region, and each logical draw has its
 * own generator seeded by draw_seed(key, t, draw). The points produced in a
 * pass therefore depend only on the plan, never on how it was split.
 */
struct SeedLane
{
    std::uint32_t key = 0;
    std::uint16_t offset = 0;
    std::uint16_t stride = 1;

    constexpr std::uint64_t pack() const noexcept
    {
        return (std::uint64_t{key} << 32) | (std::uint64_t{offset} << 16) | stride;
    }

    static constexpr SeedLane unpack(std::uint64_t lane) noexcept
    {
        return {static_cast<std::uint32_t>(lane >> 32), static_cast<std::uint16_t>(lane >> 16),
                static_cast<std::uint16_t>(lane)};
    }

    friend bool operator==(const SeedLane&, const SeedLane&) = default;
};

inline constexpr int max_workers = 0xffff;

constexpr std::uint64_t draw_seed(std::uint32_t key, std::uint64_t task, std::uint64_t draw) noexcept
{
    return combine_seed(combine_seed(mix64(key), task), draw);
}

/// Number of a region's draws handled by worker `offset` out of `stride`; low offsets take the remainder.
constexpr std::uint32_t strided_share(std::uint32_t count, unsigned offset, unsigned stride) noexcept
{
    return count / stride + (offset < count % stride ? 1u : 0u);
}

/// One sampling pass: `counts[t]` uniform draws from B_radius(centers[t]). radius == n means the whole space.
struct SamplingPlan
{
    int radius = 0;
    std::vector<Point> centers;
    std::vector<std::uint32_t> counts;
    std::uint32_t key = 0;

    std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
};

struct SamplingOutcome
{
    /// Evaluations in logical order: by task, then by draw index.
    std::vector<Evaluation> evaluations;
    /// Master-side transport time.
    double comm_ms = 0.0;
};

/// Supplies the K evaluated sample points of one pass.
class SamplingEngine
{
public:
    virtual ~SamplingEngine() = default;
    virtual const SpaceSpec& space() const = 0;
    /// 0 for in-loop serial sampling.
    virtual int workers() const = 0;
    virtual SamplingOutcome sample(const SamplingPlan& plan) = 0;
};

/**
 * Draws and evaluates one worker's share of a pass. `counts` are this
 * worker's per-task shares. Output is grouped by task, in draw order.
 */
inline std::vector<Evaluation> serve_tasks(int radius, std::span<const Point> centers,
                                           std::span<const std::uint32_t> counts, SeedLane lane,
                                           BallSampler& sampler, Evaluator& evaluator)
{
    std::vector<Evaluation> out;
    out.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    for (std::size_t t = 0; t < centers.size(); ++t) {
        for (std::uint32_t i = 0; i < counts[t]; ++i) {
            const std::uint64_t draw = lane.offset + std::uint64_t{i} * lane.stride;
            Rng rng(draw_seed(lane.key, t, draw));
            out.push_back(evaluator.evaluate(sampler.draw(centers[t], radius, rng)));
        }
    }
    return out;
}

/// Sampling inside the search loop, no workers.
class SerialEngine final : public SamplingEngine
{
public:
    explicit SerialEngine(const ObjectiveSpec& objective, std::chrono::microseconds eval_delay = {})
        : sampler_(objective.space), evaluator_(objective, eval_delay)
    {
    }

    const SpaceSpec& space() const override { return sampler_.space(); }
    int workers() const override { return 0; }

    SamplingOutcome sample(const SamplingPlan& plan) override
    {
        return {serve_tasks(plan.radius, plan.centers, plan.counts, SeedLane{plan.key, 0, 1}, sampler_, evaluator_),
                0.0};
    }

private:
    BallSampler sampler_;
    Evaluator evaluator_;
};

} // namespace bpb
