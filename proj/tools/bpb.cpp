// Command-line front end: single runs, sweeps, socket workers and the speedup model.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpb/bpb.hpp"
#include "bpb/experiment.hpp"

namespace {

struct Address
{
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

// "host:port" or a bare port.
Address parse_address(const std::string& text)
{
    Address a;
    std::string port = text;
    if (const auto colon = text.rfind(':'); colon != std::string::npos) {
        a.host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    std::size_t used = 0;
    const unsigned long value = std::stoul(port, &used);
    if (used != port.size() || value > 0xffff)
        throw bpb::invalid_input("bad port in address '" + text + "'");
    a.port = static_cast<std::uint16_t>(value);
    return a;
}

std::chrono::microseconds delay_from_ms(double ms)
{
    if (ms < 0.0)
        throw bpb::invalid_input("evaluation delay must be >= 0");
    return std::chrono::microseconds(static_cast<std::int64_t>(ms * 1000.0 + 0.5));
}

struct Options
{
    int n = 20;
    int m = 10;
    std::string function = "dejong";
    int rastrigin_k = 2;
    std::string external_cmd;
    double eval_timeout_ms = 10'000.0;
    int K = 100;
    int R = -1;
    double delta = 0.1;
    std::uint64_t seed = 1;
    std::uint64_t max_iterations = 10'000;
    std::uint64_t max_evaluations = 10'000'000;
    int workers = 0;
    std::string transport = "inproc";
    bool serialize = false;
    std::string listen;
    std::string connect;
    std::vector<int> sweep_K;
    std::vector<int> sweep_R;
    std::vector<int> sweep_p;
    int reps = 1;
    double eval_delay_ms = 0.0;
    double accept_timeout_s = 30.0;
    std::string out_dir;
    bool normalize_timings = false;
    bool strict = false;
    bool trace = false;
    bool quiet = false;
};

struct ModelOptions
{
    double S1 = 4.29;
    double A1 = 0.94;
    double C1 = 1.0;
    int p_max = 20;
};

bpb::ExperimentPlan build_plan(const Options& o)
{
    const bpb::SpaceSpec space(o.n, o.m);
    bpb::ExperimentPlan plan;
    auto& c = plan.base;
    c.objective.kind = bpb::parse_objective_kind(o.function);
    c.objective.space = space;
    c.objective.rastrigin_k = o.rastrigin_k;
    c.objective.command = o.external_cmd;
    c.objective.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.eval_timeout_ms));
    c.search.space = space;
    c.search.sample_size = o.K;
    c.search.initial_radius = o.R < 0 ? bpb::default_initial_radius(o.n) : o.R;
    c.search.delta = o.delta;
    c.search.seed = o.seed;
    c.search.max_iterations = o.max_iterations;
    c.search.max_evaluations = o.max_evaluations;
    c.engine.workers = o.workers;
    c.engine.serialize = o.serialize;
    c.engine.eval_delay = delay_from_ms(o.eval_delay_ms);
    c.engine.accept_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.accept_timeout_s * 1000.0));
    if (o.transport == "socket")
        c.engine.transport = bpb::Transport::socket;
    else if (o.transport != "inproc")
        throw bpb::invalid_input("unknown transport '" + o.transport + "'");
    if (!o.listen.empty()) {
        const Address a = parse_address(o.listen);
        c.engine.transport = bpb::Transport::socket;
        c.engine.host = a.host;
        c.engine.port = a.port;
        c.engine.spawn_local_workers = false;
    }
    plan.sample_sizes = o.sweep_K;
    plan.radii = o.sweep_R;
    plan.worker_counts = o.sweep_p;
    plan.replications = o.reps;
    return plan;
}

void print_record(const bpb::ResultRecord& r)
{
    const auto& c = r.cell;
    std::cout << bpb::to_string(c.objective.kind) << " K=" << c.search.sample_size << " R=" << c.search.initial_radius
              << " p=" << c.engine.workers << " seed=" << c.search.seed << ": ";
    if (!r.ok) {
        std::cout << "FAILED " << r.error << '\n';
        return;
    }
    std::cout << "best=" << r.result.best_value << " stop=" << bpb::to_string(r.result.stop_reason)
              << " iterations=" << r.result.iterations << " N=" << r.result.evaluations
              << " T=" << bpb::format_number(r.total_seconds(), 3) << "s\n";
}

int run_coordinator(const Options& o)
{
    bpb::ExperimentPlan plan;
    try {
        plan = build_plan(o);
        plan.validate();
    } catch (const std::exception& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    }
    const auto cells = plan.cells();

    std::vector<bpb::ResultRecord> records;
    for (const auto& cell : cells) {
        bpb::TraceObserver observer;
        if (o.trace) {
            observer = [](const bpb::IterationTrace& t) {
                std::cerr << "iter " << t.iteration << " pass " << t.pass << " r=" << t.radius
                          << " regions=" << t.partition.regions.size() << " pool=" << t.pool_size
                          << " best=" << t.best_value << (t.expansion ? " expand" : "") << (t.stopped ? " stop" : "")
                          << '\n';
            };
        }
        if (!o.listen.empty() && !o.quiet)
            std::cerr << "waiting for " << cell.engine.workers << " workers on " << cell.engine.host << ':'
                      << cell.engine.port << '\n';
        records.push_back(bpb::run_single(cell, o.normalize_timings, observer));
        if (!o.quiet)
            print_record(records.back());
    }

    if (!o.quiet) {
        std::cout << '\n' << bpb::summary_table(records);
        if (records.size() > 1)
            std::cout << '\n' << bpb::aggregate_table(bpb::aggregate_by_k_and_p(records));
    }
    if (!o.out_dir.empty()) {
        try {
            bpb::emit(records, o.out_dir);
        } catch (const std::exception& e) {
            std::cerr << "emit failed: " << e.what() << '\n';
            return 3;
        }
    }
    std::size_t failed = 0;
    for (const auto& r : records)
        failed += r.ok ? 0 : 1;
    if (failed)
        std::cerr << failed << " of " << records.size() << " cells failed\n";
    return (o.strict && failed) ? 1 : 0;
}

int run_worker(const Options& o)
{
    try {
        const Address a = parse_address(o.connect);
        bpb::WorkerOptions options;
        options.external_command = o.external_cmd;
        options.eval_delay = delay_from_ms(o.eval_delay_ms);
        options.eval_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(o.eval_timeout_ms));
        bpb::run_socket_worker(a.host, a.port, options,
                               std::chrono::milliseconds(static_cast<std::int64_t>(o.accept_timeout_s * 1000.0)));
    } catch (const std::exception& e) {
        std::cerr << "worker: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run_model(const ModelOptions& m)
{
    const bpb::PerPointRates rates{m.S1, m.A1, m.C1};
    std::cout << "p\tsigma_model\n";
    for (const auto& [p, sigma] : bpb::predicted_speedup_curve(rates, m.p_max))
        std::cout << p << '\t' << bpb::format_number(sigma, 4) << '\n';
    std::cout << "\nr = S1/C1 = " << rates.ratio() << '\n';
    if (const auto p = bpb::minimum_workers_for_speedup(rates))
        std::cout << "smallest p with r(p-1) > p: " << *p << '\n';
    else
        std::cout << "no worker count satisfies r(p-1) > p\n";
    std::cout << "bound (S1+A1)/(A1+C1): " << bpb::format_number((m.S1 + m.A1) / (m.A1 + m.C1), 4) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random search by prospective partitioning of a discrete domain {1..m}^n"};
    app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags take precedence");
    app.require_subcommand(0, 1);

    Options o;
    app.add_option("--n", o.n, "Dimension")->check(CLI::Range(1, 0xffff));
    app.add_option("--m", o.m, "Values per coordinate")->check(CLI::Range(2, 0xffff));
    app.add_option("--function", o.function, "Objective")
        ->check(CLI::IsMember({"dejong", "rastrigin", "ridge", "external"}));
    app.add_option("--rastrigin-k", o.rastrigin_k, "Cosine weight of the integer Rastrigin function");
    app.add_option("--external-cmd", o.external_cmd, "Shell command answering one value per point line");
    app.add_option("--eval-timeout-ms", o.eval_timeout_ms, "Timeout for one external evaluation");
    app.add_option("--K", o.K, "Sample points per pass");
    app.add_option("--R", o.R, "Initial radius (default min(n-1, 100))");
    app.add_option("--delta", o.delta, "Prospectiveness threshold");
    app.add_option("--seed", o.seed, "Master seed");
    app.add_option("--max-iterations", o.max_iterations, "Iteration cap");
    app.add_option("--max-evaluations", o.max_evaluations, "Cap on drawn points");
    app.add_option("--workers", o.workers, "Worker count p (0 samples in the search loop)");
    app.add_option("--transport", o.transport, "Worker transport")->check(CLI::IsMember({"inproc", "socket"}));
    app.add_flag("--serialize", o.serialize, "Pass in-process messages through the wire codec");
    app.add_option("--listen", o.listen, "Listen on host:port for external workers (implies socket transport)");
    app.add_option("--connect", o.connect, "Run as a worker connected to host:port");
    app.add_option("--sweep-K", o.sweep_K, "Comma-separated K values")->delimiter(',');
    app.add_option("--sweep-R", o.sweep_R, "Comma-separated R values")->delimiter(',');
    app.add_option("--sweep-p", o.sweep_p, "Comma-separated worker counts")->delimiter(',');
    app.add_option("--reps", o.reps, "Replications per cell (seeds seed, seed+1, ...)");
    app.add_option("--eval-delay-ms", o.eval_delay_ms, "Artificial delay per evaluation");
    app.add_option("--accept-timeout-s", o.accept_timeout_s, "Socket accept and connect timeout");
    app.add_option("--out-dir", o.out_dir, "Write records.jsonl, summary.tsv, time_vs_p.tsv, speedup.tsv here");
    app.add_flag("--normalize-timings", o.normalize_timings, "Zero all timing fields in records");
    app.add_flag("--strict", o.strict, "Exit nonzero if any cell fails");
    app.add_flag("--trace", o.trace, "Print one line per pass to stderr");
    app.add_flag("--quiet", o.quiet, "Suppress progress output");

    auto* worker = app.add_subcommand("worker", "Serve sampling requests for a coordinator");
    worker->add_option("--connect", o.connect, "Coordinator host:port")->required();
    worker->add_option("--external-cmd", o.external_cmd, "Shell command for external objectives");
    worker->add_option("--eval-delay-ms", o.eval_delay_ms, "Artificial delay per evaluation");
    worker->add_option("--eval-timeout-ms", o.eval_timeout_ms, "Timeout for one external evaluation");
    worker->add_option("--accept-timeout-s", o.accept_timeout_s, "Connect timeout");

    ModelOptions mo;
    auto* model = app.add_subcommand("model", "Tabulate the predicted speedup for given per-point rates");
    model->add_option("--S1", mo.S1, "Sampling ms per point");
    model->add_option("--A1", mo.A1, "Algorithm ms per point");
    model->add_option("--C1", mo.C1, "Communication ms per point");
    model->add_option("--p-max", mo.p_max, "Largest worker count")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    if (model->parsed())
        return run_model(mo);
    if (worker->parsed() || !o.connect.empty())
        return run_worker(o);
    return run_coordinator(o);
}
