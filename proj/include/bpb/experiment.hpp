#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpb/objectives.hpp"
#include "bpb/parallel.hpp"
#include "bpb/perf.hpp"
#include "bpb/search.hpp"

namespace bpb {

/// Everything needed to run one search.
struct CellConfig
{
    ObjectiveSpec objective;
    SearchConfig search;
    EngineConfig engine;

    void validate() const
    {
        objective.validate();
        search.validate();
        engine.validate();
        if (!(objective.space == search.space))
            throw invalid_input("objective and search spaces differ");
    }
};

/// Default initial radius min(n - 1, 100), at least 1.
inline int default_initial_radius(int n)
{
    return std::clamp(n - 1, 1, 100);
}

/// A base cell swept over K, R, p and seeds, each combination repeated `replications` times.
struct ExperimentPlan
{
    CellConfig base;
    std::vector<int> sample_sizes;
    std::vector<int> radii;
    std::vector<int> worker_counts;
    std::vector<std::uint64_t> seeds;
    int replications = 1;

    /// Cells in K-major, then p, R, seed, replication order. Empty axes take the base value.
    std::vector<CellConfig> cells() const
    {
        const auto ks = sample_sizes.empty() ? std::vector<int>{base.search.sample_size} : sample_sizes;
        const auto rs = radii.empty() ? std::vector<int>{base.search.initial_radius} : radii;
        const auto ps = worker_counts.empty() ? std::vector<int>{base.engine.workers} : worker_counts;
        const auto ss = seeds.empty() ? std::vector<std::uint64_t>{base.search.seed} : seeds;
        if (replications < 1)
            throw invalid_input("replications must be >= 1");
        std::vector<CellConfig> out;
        for (int k : ks)
            for (int p : ps)
                for (int r : rs)
                    for (auto s : ss)
                        for (int rep = 0; rep < replications; ++rep) {
                            CellConfig cell = base;
                            cell.search.sample_size = k;
                            cell.search.initial_radius = r;
                            cell.engine.workers = p;
                            cell.search.seed = s + static_cast<std::uint64_t>(rep);
                            out.push_back(std::move(cell));
                        }
        return out;
    }

    void validate() const
    {
        for (const auto& cell : cells())
            cell.validate();
    }
};

/// Self-contained outcome of one cell.
struct ResultRecord
{
    CellConfig cell;
    bool ok = false;
    std::string error;
    SearchResult result;
    PerPointRates rates;
    bool timings_normalized = false;

    double total_seconds() const
    {
        return (result.timing.sample_ms + result.timing.algorithm_ms + result.timing.comm_ms) / 1000.0;
    }
};

inline void normalize_timings(ResultRecord& record)
{
    record.result.timing.sample_ms = 0.0;
    record.result.timing.algorithm_ms = 0.0;
    record.result.timing.comm_ms = 0.0;
    record.rates = {};
    record.timings_normalized = true;
}

/// Runs one cell. Run-time failures are recorded, not thrown; configuration errors throw before running.
inline ResultRecord run_single(const CellConfig& cell, bool normalize = false, const TraceObserver& observer = {})
{
    cell.validate();
    ResultRecord record;
    record.cell = cell;
    try {
        record.result = run(cell.search, cell.objective, cell.engine, observer);
        record.ok = true;
        if (record.result.timing.points > 0)
            record.rates = per_point_rates(record.result.timing);
    } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
    }
    if (normalize)
        normalize_timings(record);
    return record;
}

/// Mean total time over all successful runs sharing (K, p).
struct AggregateRow
{
    int sample_size = 0;
    int workers = 0;
    double mean_total_s = 0.0;
    std::size_t runs = 0;
    std::size_t failures = 0;
};

struct SweepOutcome
{
    std::vector<ResultRecord> records;
    std::vector<AggregateRow> aggregate;
};

inline std::vector<AggregateRow> aggregate_by_k_and_p(const std::vector<ResultRecord>& records)
{
    std::vector<AggregateRow> rows;
    std::map<std::pair<int, int>, std::size_t> where;
    for (const auto& rec : records) {
        const auto key = std::make_pair(rec.cell.search.sample_size, rec.cell.engine.workers);
        auto it = where.find(key);
        if (it == where.end()) {
            it = where.emplace(key, rows.size()).first;
            rows.push_back({key.first, key.second, 0.0, 0, 0});
        }
        auto& row = rows[it->second];
        if (rec.ok) {
            row.mean_total_s += rec.total_seconds();
            ++row.runs;
        } else {
            ++row.failures;
        }
    }
    for (auto& row : rows) {
        if (row.runs)
            row.mean_total_s /= static_cast<double>(row.runs);
    }
    return rows;
}

/// Runs every cell in order; a failing cell is recorded and the sweep goes on.
inline SweepOutcome run_sweep(const ExperimentPlan& plan, bool normalize = false,
                              const std::function<void(const ResultRecord&)>& progress = {})
{
    plan.validate();
    SweepOutcome out;
    for (const auto& cell : plan.cells()) {
        out.records.push_back(run_single(cell, normalize));
        if (progress)
            progress(out.records.back());
    }
    out.aggregate = aggregate_by_k_and_p(out.records);
    return out;
}

// ---------------------------------------------------------------------------
// Records as JSON lines

inline nlohmann::json to_json(const ResultRecord& r)
{
    using nlohmann::json;
    const auto& c = r.cell;
    json point = json::array();
    for (int v : r.result.best_point)
        point.push_back(v);
    return json{
        {"function", std::string(to_string(c.objective.kind))},
        {"n", c.search.space.n()},
        {"m", c.search.space.m()},
        {"rastrigin_k", c.objective.rastrigin_k},
        {"external_cmd", c.objective.command},
        {"K", c.search.sample_size},
        {"R", c.search.initial_radius},
        {"delta", c.search.delta},
        {"seed", c.search.seed},
        {"max_iterations", c.search.max_iterations},
        {"max_evaluations", c.search.max_evaluations},
        {"workers", c.engine.workers},
        {"transport", c.engine.transport == Transport::socket ? "socket" : "inproc"},
        {"eval_delay_us", c.engine.eval_delay.count()},
        {"status", r.ok ? "ok" : "failed"},
        {"error", r.error},
        {"best_value", r.result.best_value},
        {"best_point", point},
        {"iterations", r.result.iterations},
        {"passes", r.result.passes},
        {"evaluations", r.result.evaluations},
        {"alpha", r.result.alpha},
        {"stop_reason", std::string(to_string(r.result.stop_reason))},
        {"timing",
         {{"S_ms", r.result.timing.sample_ms},
          {"A_ms", r.result.timing.algorithm_ms},
          {"C_ms", r.result.timing.comm_ms},
          {"N", r.result.timing.points}}},
        {"rates", {{"S1_ms", r.rates.sample}, {"A1_ms", r.rates.algorithm}, {"C1_ms", r.rates.comm}}},
        {"timings_normalized", r.timings_normalized},
    };
}

inline ResultRecord record_from_json(const nlohmann::json& j)
{
    ResultRecord r;
    auto& c = r.cell;
    const SpaceSpec space(j.at("n").get<int>(), j.at("m").get<int>());
    c.objective.kind = parse_objective_kind(j.at("function").get<std::string>());
    c.objective.space = space;
    c.objective.rastrigin_k = j.at("rastrigin_k").get<int>();
    c.objective.command = j.at("external_cmd").get<std::string>();
    c.search.space = space;
    c.search.sample_size = j.at("K").get<int>();
    c.search.initial_radius = j.at("R").get<int>();
    c.search.delta = j.at("delta").get<double>();
    c.search.seed = j.at("seed").get<std::uint64_t>();
    c.search.max_iterations = j.at("max_iterations").get<std::uint64_t>();
    c.search.max_evaluations = j.at("max_evaluations").get<std::uint64_t>();
    c.engine.workers = j.at("workers").get<int>();
    c.engine.transport = j.at("transport").get<std::string>() == "socket" ? Transport::socket : Transport::inproc;
    c.engine.eval_delay = std::chrono::microseconds(j.at("eval_delay_us").get<std::int64_t>());
    r.ok = j.at("status").get<std::string>() == "ok";
    r.error = j.at("error").get<std::string>();
    r.result.best_value = j.at("best_value").get<double>();
    r.result.best_point = Point(j.at("best_point").get<std::vector<int>>());
    r.result.iterations = j.at("iterations").get<std::uint64_t>();
    r.result.passes = j.at("passes").get<std::uint64_t>();
    r.result.evaluations = j.at("evaluations").get<std::uint64_t>();
    r.result.alpha = j.at("alpha").get<double>();
    r.result.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    const auto& t = j.at("timing");
    r.result.timing = {t.at("S_ms").get<double>(), t.at("A_ms").get<double>(), t.at("C_ms").get<double>(),
                       t.at("N").get<std::uint64_t>()};
    const auto& rates = j.at("rates");
    r.rates = {rates.at("S1_ms").get<double>(), rates.at("A1_ms").get<double>(), rates.at("C1_ms").get<double>()};
    r.timings_normalized = j.at("timings_normalized").get<bool>();
    return r;
}

inline std::string to_json_line(const ResultRecord& r)
{
    return to_json(r).dump();
}

inline std::vector<ResultRecord> parse_records(std::istream& in)
{
    std::vector<ResultRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty())
            out.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tab-separated tables

inline constexpr const char* summary_header = "function\tN\tT\tS\tA\tC\tS1\tA1\tC1";

inline std::string format_number(double v, int precision)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << v;
    return os.str();
}

/// Summary row; run times in seconds, point times in milliseconds.
inline std::string summary_line(const ResultRecord& r)
{
    const auto row = summarize_run(std::string(to_string(r.cell.objective.kind)), r.result.timing);
    std::ostringstream os;
    os << row.function << '\t' << row.points << '\t' << format_number(row.total_s, 3) << '\t'
       << format_number(row.sample_s, 3) << '\t' << format_number(row.algorithm_s, 3) << '\t'
       << format_number(row.comm_s, 3) << '\t' << format_number(row.sample_per_point_ms, 4) << '\t'
       << format_number(row.algorithm_per_point_ms, 4) << '\t' << format_number(row.comm_per_point_ms, 4);
    return os.str();
}

inline std::string summary_table(const std::vector<ResultRecord>& records)
{
    std::string out = std::string(summary_header) + '\n';
    for (const auto& r : records) {
        if (r.ok && r.result.timing.points > 0)
            out += summary_line(r) + '\n';
    }
    return out;
}

inline std::string aggregate_table(const std::vector<AggregateRow>& rows)
{
    std::string out = "K\tp\tmean_T\truns\tfailures\n";
    for (const auto& row : rows) {
        out += std::to_string(row.sample_size) + '\t' + std::to_string(row.workers) + '\t'
             + format_number(row.mean_total_s, 3) + '\t' + std::to_string(row.runs) + '\t'
             + std::to_string(row.failures) + '\n';
    }
    return out;
}

/**
 * Predicted speedup per function from the mean per-point rates of its serial
 * runs, with the measured T(p=0)/T(p) where the records include both.
 * `comm_per_point_ms` stands in for C1 when the serial runs measured none.
 */
inline std::string speedup_table(const std::vector<ResultRecord>& records, int p_max, double comm_per_point_ms)
{
    std::string out = "function\tp\tsigma_model\tsigma_measured\n";
    std::vector<std::string> functions;
    for (const auto& r : records) {
        const std::string f(to_string(r.cell.objective.kind));
        if (std::find(functions.begin(), functions.end(), f) == functions.end())
            functions.push_back(f);
    }
    for (const auto& f : functions) {
        TimingLedger serial;
        std::map<int, std::pair<double, int>> by_p;
        for (const auto& r : records) {
            if (!r.ok || std::string(to_string(r.cell.objective.kind)) != f)
                continue;
            if (r.cell.engine.workers == 0)
                serial += r.result.timing;
            auto& slot = by_p[r.cell.engine.workers];
            slot.first += r.total_seconds();
            slot.second += 1;
        }
        if (serial.points == 0)
            continue;
        PerPointRates rates = per_point_rates(serial);
        if (rates.comm <= 0.0)
            rates.comm = comm_per_point_ms;
        const auto base = by_p.find(0);
        for (const auto& [p, sigma] : predicted_speedup_curve(rates, p_max)) {
            out += f + '\t' + std::to_string(p) + '\t' + format_number(sigma, 4) + '\t';
            const auto it = by_p.find(p);
            if (base != by_p.end() && it != by_p.end() && it->second.first > 0.0) {
                const double t0 = base->second.first / base->second.second;
                const double tp = it->second.first / it->second.second;
                out += format_number(t0 / tp, 4);
            } else {
                out += "-";
            }
            out += '\n';
        }
    }
    return out;
}

struct EmitOptions
{
    int speedup_p_max = 20;
    /// C1 assumed for the predicted curve when runs measured no transport time.
    double comm_per_point_ms = 1.0;
};

/**
 * Writes records.jsonl, summary.tsv, time_vs_p.tsv and speedup.tsv under
 * `dir`, creating it if needed. Returns the paths written.
 */
inline std::vector<std::filesystem::path> emit(const std::vector<ResultRecord>& records,
                                               const std::filesystem::path& dir, const EmitOptions& options = {})
{
    if (records.empty())
        throw invalid_input("nothing to emit");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    auto write = [&](const std::string& name, const std::string& content) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + path.string());
        out << content;
        if (!out)
            throw std::runtime_error("write failed for " + path.string());
        written.push_back(path);
    };

    std::string lines;
    for (const auto& r : records)
        lines += to_json_line(r) + '\n';
    write("records.jsonl", lines);
    write("summary.tsv", summary_table(records));
    write("time_vs_p.tsv", aggregate_table(aggregate_by_k_and_p(records)));
    write("speedup.tsv", speedup_table(records, options.speedup_p_max, options.comm_per_point_ms));
    return written;
}

} // namespace bpb
