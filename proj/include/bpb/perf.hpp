#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bpb/error.hpp"

namespace bpb {

/**
 * Accumulated run time split by phase, in milliseconds.
 *
 *   sample_ms     S: drawing sample points and evaluating the objective
 *   algorithm_ms  A: everything the search does with the samples
 *   comm_ms       C: master-side time moving data to and from workers
 *   points        N: sample points examined
 */
struct TimingLedger
{
    double sample_ms = 0.0;
    double algorithm_ms = 0.0;
    double comm_ms = 0.0;
    std::uint64_t points = 0;

    TimingLedger& operator+=(const TimingLedger& o)
    {
        sample_ms += o.sample_ms;
        algorithm_ms += o.algorithm_ms;
        comm_ms += o.comm_ms;
        points += o.points;
        return *this;
    }
};

/// Per-point times in milliseconds.
struct PerPointRates
{
    double sample = 0.0;    // S1
    double algorithm = 0.0; // A1
    double comm = 0.0;      // C1

    /// r = S1 / C1; infinite when there is no communication cost.
    double ratio() const
    {
        return comm > 0.0 ? sample / comm : std::numeric_limits<double>::infinity();
    }
};

inline PerPointRates per_point_rates(const TimingLedger& ledger)
{
    if (ledger.points == 0)
        throw invalid_input("per-point rates need at least one sample point");
    const auto n = static_cast<double>(ledger.points);
    return {ledger.sample_ms / n, ledger.algorithm_ms / n, ledger.comm_ms / n};
}

/// T_S = S + A.
inline double serial_total(const TimingLedger& ledger)
{
    return ledger.sample_ms + ledger.algorithm_ms;
}

/// T_P = S/p + A + C with S = S1 N and A = A1 N.
inline double parallel_total_model(const PerPointRates& rates, double points, int workers, double comm_total)
{
    if (workers < 1)
        throw invalid_input("parallel time model needs at least one worker");
    return rates.sample * points / workers + rates.algorithm * points + comm_total;
}

/// sigma(p) = (S1 + A1) / (S1/p + A1 + C1).
inline double speedup_model(const PerPointRates& rates, int workers)
{
    if (workers < 1)
        throw invalid_input("speedup model needs at least one worker");
    return (rates.sample + rates.algorithm) / (rates.sample / workers + rates.algorithm + rates.comm);
}

/// Whether S1/C1 > p/(p-1), the condition for sigma(p) > 1 when A1 is negligible.
inline bool speedup_threshold(const PerPointRates& rates, int workers)
{
    if (workers < 2)
        return false;
    if (rates.comm <= 0.0)
        return true;
    // r > p/(p-1)  <=>  r (p-1) > p, which avoids rounding in the quotient.
    return rates.ratio() * (workers - 1) > workers;
}

/// Smallest p in [2, limit] meeting speedup_threshold, if any.
inline std::optional<int> minimum_workers_for_speedup(const PerPointRates& rates, int limit = 1 << 20)
{
    for (int p = 2; p <= limit; ++p) {
        if (speedup_threshold(rates, p))
            return p;
    }
    return std::nullopt;
}

/// r p / (r + p): speedup with A1 neglected. Tends to r as p grows.
inline double asymptotic_speedup(const PerPointRates& rates, double workers)
{
    const double r = rates.ratio();
    if (r == std::numeric_limits<double>::infinity())
        return workers;
    return r * workers / (r + workers);
}

/// (p, sigma(p)) for p = 1..p_max.
inline std::vector<std::pair<int, double>> predicted_speedup_curve(const PerPointRates& rates, int p_max)
{
    if (p_max < 1)
        throw invalid_input("speedup curve needs p_max >= 1");
    std::vector<std::pair<int, double>> curve;
    curve.reserve(static_cast<std::size_t>(p_max));
    for (int p = 1; p <= p_max; ++p)
        curve.emplace_back(p, speedup_model(rates, p));
    return curve;
}

/// One summary row: run times in seconds, point times in milliseconds.
struct SummaryRow
{
    std::string function;
    std::uint64_t points = 0;
    double total_s = 0.0;
    double sample_s = 0.0;
    double algorithm_s = 0.0;
    double comm_s = 0.0;
    double sample_per_point_ms = 0.0;
    double algorithm_per_point_ms = 0.0;
    double comm_per_point_ms = 0.0;
};

/// Total is S + A + C, which is T_S for a serial run (C = 0).
inline SummaryRow summarize_run(const std::string& function, const TimingLedger& ledger)
{
    if (ledger.points == 0)
        throw invalid_input("cannot summarize a run that examined no points");
    const auto rates = per_point_rates(ledger);
    SummaryRow row;
    row.function = function;
    row.points = ledger.points;
    row.sample_s = ledger.sample_ms / 1000.0;
    row.algorithm_s = ledger.algorithm_ms / 1000.0;
    row.comm_s = ledger.comm_ms / 1000.0;
    row.total_s = row.sample_s + row.algorithm_s + row.comm_s;
    row.sample_per_point_ms = rates.sample;
    row.algorithm_per_point_ms = rates.algorithm;
    row.comm_per_point_ms = rates.comm;
    return row;
}

} // namespace bpb
