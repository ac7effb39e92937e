// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bpb/bpb.hpp"

namespace {

using bpb::Point;
using bpb::SpaceSpec;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Verdict
{
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    bool pass() const { return failures.empty(); }

    void require(bool ok, const std::string& what)
    {
        if (!ok)
            failures.push_back(what);
    }

    template <class... Parts>
    void note(const Parts&... parts)
    {
        std::ostringstream os;
        (os << ... << parts);
        notes.push_back(os.str());
    }
};

std::vector<Point> enumerate_space(int n, int m)
{
    std::vector<Point> out;
    std::vector<int> x(static_cast<std::size_t>(n), 1);
    for (;;) {
        out.emplace_back(x);
        int i = 0;
        while (i < n && x[static_cast<std::size_t>(i)] == m)
            x[static_cast<std::size_t>(i++)] = 1;
        if (i == n)
            return out;
        ++x[static_cast<std::size_t>(i)];
    }
}

int naive_hamming(const Point& a, const Point& b)
{
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] != b[i];
    return d;
}

// 1. Geometry counts against brute force, from every center.
void geometry(Verdict& v)
{
    const auto start = Clock::now();
    long checks = 0;
    for (int n = 1; n <= 6; ++n) {
        for (int m = 2; m <= 4; ++m) {
            const SpaceSpec space(n, m);
            const auto all = enumerate_space(n, m);
            for (const auto& center : all) {
                std::vector<long> shell(static_cast<std::size_t>(n) + 1, 0);
                for (const auto& x : all)
                    ++shell[static_cast<std::size_t>(naive_hamming(center, x))];
                long ball = 0;
                for (int r = 0; r <= n; ++r) {
                    ball += shell[static_cast<std::size_t>(r)];
                    ++checks;
                    if (bpb::sphere_count(space, r) != shell[static_cast<std::size_t>(r)]
                        || bpb::ball_count(space, r) != ball) {
                        v.require(false, "count mismatch at n=" + std::to_string(n) + " m=" + std::to_string(m)
                                     + " r=" + std::to_string(r));
                        return;
                    }
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    v.require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
    v.note(checks, " (center, n, m, r) cases in ", elapsed, " s");
}

// 2. Ball sampling chi-square and sphere-radius distribution.
void sampling(Verdict& v)
{
    const SpaceSpec space(5, 3);
    const Point center{2, 1, 3, 2, 1};
    const long draws = 200'000;
    bpb::Rng rng(2024);
    std::unordered_map<Point, long, bpb::PointHash> counts;
    for (long i = 0; i < draws; ++i)
        ++counts[bpb::sample_ball(space, center, 2, rng)];
    const auto ball = bpb::enumerate_ball(space, center, 2);
    const double expected = static_cast<double>(draws) / static_cast<double>(ball.size());
    double stat = 0.0;
    for (const auto& x : ball) {
        const auto it = counts.find(x);
        const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
        stat += (c - expected) * (c - expected) / expected;
    }
    v.require(counts.size() == ball.size(), "sample left the ball");
    const double dof = static_cast<double>(ball.size() - 1);
    const double critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(dof), 1e-3));
    v.require(stat < critical, "chi-square " + std::to_string(stat) + " >= " + std::to_string(critical));

    const SpaceSpec cube(3, 2);
    const double p[] = {1.0 / 8, 3.0 / 8, 3.0 / 8, 1.0 / 8};
    const long radius_draws = 100'000;
    long hits[4] = {};
    bpb::Rng radius_rng(7);
    for (long i = 0; i < radius_draws; ++i)
        ++hits[bpb::sample_sphere_radius(cube, 3, radius_rng)];
    double worst = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double mean = radius_draws * p[j];
        const double sigma = std::sqrt(radius_draws * p[j] * (1 - p[j]));
        worst = std::max(worst, std::abs(hits[j] - mean) / sigma);
    }
    v.require(worst <= 3.0, "sphere radius bin off by " + std::to_string(worst) + " sigma");
    v.note("chi2 ", stat, " < ", critical);
    v.note("worst radius bin ", worst, " sigma");
}

bpb::OrderedSample alpha_sample(double y1, double y3, double y11)
{
    std::vector<double> values{y1, (y1 + y3) / 2, y3};
    for (int i = 4; i < 11; ++i)
        values.push_back(y3 + (y11 - y3) * (i - 3) / 8.0);
    values.push_back(y11);
    while (values.size() < 100)
        values.push_back(y11 + static_cast<double>(values.size()));
    return bpb::OrderedSample(values);
}

// 3. Criterion and tail-shape hand cases, select_k rule.
void criterion(Verdict& v)
{
    const auto half = bpb::prospectiveness(bpb::OrderedSample({1.0, 2.0, 3.0}), 0.0, 1, 1.0);
    v.require(half && std::abs(*half - 0.5) <= 1e-12, "criterion 0.5 case");
    const auto cube = bpb::prospectiveness(bpb::OrderedSample({1.0, 1.5, 1.75, 2.0, 9.0}), 0.0, 3, 2.0);
    v.require(cube && std::abs(*cube - 0.421875) <= 1e-12, "criterion 0.421875 case");

    const auto one = bpb::estimate_alpha(alpha_sample(0.0, 1.0, 5.0));
    v.require(one && *one == 1.0, "alpha for ratio 5");
    const auto half_alpha = bpb::estimate_alpha(alpha_sample(0.0, 1.0, 25.0));
    v.require(half_alpha && *half_alpha == 0.5, "alpha for ratio 25");

    const std::pair<std::size_t, std::optional<int>> rule[] = {
        {9, std::nullopt}, {10, 1}, {50, 5}, {99, 9}, {100, 10}, {1'000'000, 10}};
    for (const auto& [n, k] : rule)
        v.require(bpb::select_k(n) == k, "select_k(" + std::to_string(n) + ")");
    v.note("criterion 0.5 / 0.421875, alpha 1.0 / 0.5, select_k on 6 sizes");
}

// 4. Objective ground truth.
void objectives(Verdict& v)
{
    for (int m : {2, 4, 6, 10, 50}) {
        for (int n : {1, 4, 20}) {
            const Point mid = Point::filled(n, m / 2);
            v.require(bpb::dejong(mid, m) == 0.0, "dejong optimum");
            v.require(bpb::ridge(mid, m) == 0.0, "ridge optimum");
            for (int k : {0, 1, 2, 5})
                v.require(std::abs(bpb::rastrigin_int(mid, m, k)) < 1e-9, "rastrigin optimum");
        }
    }
    for (const auto& x : enumerate_space(3, 4))
        v.require(std::abs(bpb::rastrigin_int(x, 4, 0) - bpb::dejong(x, 4)) < 1e-9,
                  "rastrigin k=0 at " + x.to_string());
    for (int c = 1; c <= 6; ++c)
        v.require(bpb::ridge(Point::filled(4, c), 6) == 4.0 * std::abs(c - 3), "ridge constant " + std::to_string(c));
    v.note("optima, rastrigin(k=0) == dejong on 64 points, ridge constants");
}

struct RunSpec
{
    bpb::ObjectiveKind kind;
    int n, m, K, R;
};

// 5. End-to-end success rates over 20 seeds.
void end_to_end(Verdict& v)
{
    struct Case
    {
        const char* name;
        RunSpec spec;
        int needed;
        bool require_confirmed;
    };
    const Case cases[] = {
        {"dejong", {bpb::ObjectiveKind::dejong, 20, 10, 100, 10}, 19, true},
        {"ridge", {bpb::ObjectiveKind::ridge, 10, 6, 100, bpb::default_initial_radius(10)}, 16, false},
        {"rastrigin", {bpb::ObjectiveKind::rastrigin, 10, 6, 100, bpb::default_initial_radius(10)}, 14, false},
    };
    for (const auto& c : cases) {
        bpb::ObjectiveSpec obj;
        obj.kind = c.spec.kind;
        obj.space = SpaceSpec(c.spec.n, c.spec.m);
        obj.rastrigin_k = 2;
        int successes = 0;
        double slowest = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            bpb::SearchConfig config;
            config.space = obj.space;
            config.sample_size = c.spec.K;
            config.initial_radius = c.spec.R;
            config.delta = 0.1;
            config.seed = seed;
            const auto start = Clock::now();
            const auto r = bpb::run(config, obj, bpb::EngineConfig{});
            const double elapsed = seconds_since(start);
            slowest = std::max(slowest, elapsed);
            const bool ok = r.best_value == 0.0
                         && (!c.require_confirmed || r.stop_reason == bpb::StopReason::local_minimum_confirmed)
                         && elapsed < 30.0;
            successes += ok;
        }
        v.require(successes >= c.needed, std::string(c.name) + " " + std::to_string(successes) + "/20 < "
                                             + std::to_string(c.needed));
        v.note(c.name, " ", successes, "/20 (slowest ", slowest, " s)");
    }
}

// 6. Speedup model figures.
void speedup_model(Verdict& v)
{
    const bpb::PerPointRates rastrigin{4.29, 0.94, 1.0};
    const double three = bpb::speedup_model(rastrigin, 3);
    v.require(std::abs(three - 1.552) <= 1e-3, "sigma(3) = " + std::to_string(three));
    const double single = bpb::speedup_model(rastrigin, 1);
    v.require(single < 1.0, "sigma(1) = " + std::to_string(single));
    const double limit = bpb::asymptotic_speedup(rastrigin, 1e6);
    v.require(std::abs(limit - 4.29) <= 1e-3, "asymptote " + std::to_string(limit));
    const auto minimum = bpb::minimum_workers_for_speedup({1.10, 0.50, 1.0});
    v.require(minimum == 12, "minimum p " + (minimum ? std::to_string(*minimum) : std::string("none")));
    v.note("sigma(3) ", three, ", sigma(1) ", single, ", asymptote ", limit, ", minimum p ", minimum.value_or(-1));
}

using Multiset = std::vector<std::pair<Point, double>>;

std::vector<Multiset> iteration_multisets(const bpb::ObjectiveSpec& obj, const bpb::SearchConfig& config, int workers)
{
    std::vector<Multiset> out;
    bpb::EngineConfig ec;
    ec.workers = workers;
    bpb::run(config, obj, ec, [&](const bpb::IterationTrace& t) {
        if (out.size() < t.iteration)
            out.resize(t.iteration);
        for (const auto& e : t.samples)
            out[t.iteration - 1].emplace_back(e.point, e.value);
    });
    for (auto& set : out)
        std::sort(set.begin(), set.end());
    return out;
}

// 7. Serial and in-process parallel runs draw the same points every iteration.
void equivalence(Verdict& v)
{
    const auto start = Clock::now();
    const RunSpec specs[] = {
        {bpb::ObjectiveKind::rastrigin, 20, 10, 100, 10},
        {bpb::ObjectiveKind::ridge, 12, 6, 80, 8},
        {bpb::ObjectiveKind::dejong, 30, 8, 150, 15},
    };
    std::size_t iterations = 0;
    for (const auto& s : specs) {
        bpb::ObjectiveSpec obj;
        obj.kind = s.kind;
        obj.space = SpaceSpec(s.n, s.m);
        obj.rastrigin_k = 2;
        bpb::SearchConfig config;
        config.space = obj.space;
        config.sample_size = s.K;
        config.initial_radius = s.R;
        config.seed = 31;
        const auto serial = iteration_multisets(obj, config, 0);
        iterations += serial.size();
        for (int p : {1, 2, 4})
            v.require(iteration_multisets(obj, config, p) == serial,
                      std::string(bpb::to_string(s.kind)) + " differs at p=" + std::to_string(p));
    }
    const double elapsed = seconds_since(start);
    v.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
    v.note(iterations, " iterations compared over 3 problems at p = 1, 2, 4 in ", elapsed, " s");
}

Point random_point(bpb::Rng& rng, int n, int m)
{
    std::vector<int> c(static_cast<std::size_t>(n));
    for (auto& x : c)
        x = rng.uniform_int(1, m);
    return Point(std::move(c));
}

// 8. Codec round trips, frame size, fuzzing.
void codec(Verdict& v)
{
    bpb::Rng rng(8);
    int mismatches = 0;
    for (int i = 0; i < 10'000; ++i) {
        const int n = rng.uniform_int(1, 64);
        bpb::SampleRequest req;
        req.radius = rng.uniform_int(0, n);
        req.seed_lane = rng();
        for (int t = rng.uniform_int(0, 12); t > 0; --t)
            req.tasks.push_back({random_point(rng, n, 65535), static_cast<std::uint32_t>(rng())});
        mismatches += bpb::decode_request(bpb::encode_request(req, n), n) != req;

        bpb::SampleReply rep;
        for (int t = rng.uniform_int(0, 12); t > 0; --t) {
            double value;
            do
                value = std::bit_cast<double>(rng());
            while (!std::isfinite(value));
            rep.evaluations.push_back({random_point(rng, n, 65535), value, {}});
        }
        const auto back = bpb::decode_reply(bpb::encode_reply(rep, n), n);
        bool same = back.evaluations.size() == rep.evaluations.size();
        for (std::size_t j = 0; same && j < rep.evaluations.size(); ++j)
            same = back.evaluations[j].point == rep.evaluations[j].point
                && std::bit_cast<std::uint64_t>(back.evaluations[j].value)
                       == std::bit_cast<std::uint64_t>(rep.evaluations[j].value);
        mismatches += !same;
    }
    v.require(mismatches == 0, std::to_string(mismatches) + " round-trip mismatches");
    v.require(bpb::reply_point_bytes(200) == 408, "reply point at n=200 is " + std::to_string(bpb::reply_point_bytes(200)));

    long rejected = 0;
    for (int i = 0; i < 100'000; ++i) {
        bpb::Bytes bytes(static_cast<std::size_t>(rng.below(80)));
        for (auto& b : bytes)
            b = static_cast<std::uint8_t>(rng());
        if (bytes.size() >= bpb::frame_header_bytes && (i & 1)) {
            std::memcpy(bytes.data(), bpb::frame_magic.data(), 4);
            bytes[4] = static_cast<std::uint8_t>(1 + rng.below(5));
            const auto payload = static_cast<std::uint32_t>(bytes.size() - bpb::frame_header_bytes);
            std::memcpy(bytes.data() + 5, &payload, 4);
        }
        const int n = 1 + static_cast<int>(rng.below(4));
        const std::function<void()> decoders[] = {
            [&] { bpb::decode_frame(bytes); },
            [&] { bpb::decode_hello(bytes); },
            [&] { bpb::decode_request(bytes, n); },
            [&] { bpb::decode_reply(bytes, n); },
        };
        for (const auto& decode : decoders) {
            try {
                decode();
            } catch (const bpb::decode_error&) {
                ++rejected;
            }
        }
    }
    v.note("10^4 round trips, 408-byte point frame, 10^5 fuzz inputs (", rejected, " clean rejections)");
}

// 9. Wall-clock speedup over sockets with an expensive objective.
void measured_speedup(Verdict& v)
{
    bpb::ObjectiveSpec obj;
    obj.kind = bpb::ObjectiveKind::dejong;
    obj.space = SpaceSpec(20, 10);
    bpb::SearchConfig config;
    config.space = obj.space;
    config.sample_size = 200;
    config.initial_radius = 10;
    config.seed = 1;

    auto timed = [&](int workers) {
        bpb::EngineConfig ec;
        ec.workers = workers;
        ec.transport = bpb::Transport::socket;
        ec.eval_delay = std::chrono::milliseconds(5);
        const auto start = Clock::now();
        const auto r = bpb::run(config, obj, ec);
        return std::make_pair(seconds_since(start), r);
    };
    const auto [serial_s, serial] = timed(0);
    const auto [parallel_s, parallel] = timed(3);
    v.require(serial.best_point == parallel.best_point && serial.evaluations == parallel.evaluations,
              "serial and parallel runs diverged");
    const double speedup = serial_s / parallel_s;
    v.require(speedup > 1.8, "speedup " + std::to_string(speedup) + " <= 1.8");
    v.note("T(p=0) ", serial_s, " s, T(p=3) ", parallel_s, " s, speedup ", speedup, " over ", serial.evaluations,
           " points");
}

} // namespace

int main()
{
    struct Criterion
    {
        const char* name;
        void (*check)(Verdict&);
    };
    const Criterion criteria[] = {
        {"geometry oracle equivalence", geometry},
        {"sampling uniformity", sampling},
        {"criterion correctness", criterion},
        {"test-function ground truth", objectives},
        {"end-to-end optimization", end_to_end},
        {"speedup model reproduction", speedup_model},
        {"serial/parallel equivalence", equivalence},
        {"codec", codec},
        {"measured speedup", measured_speedup},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Verdict v;
        try {
            c.check(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        std::string line = (v.pass() ? "PASS " : "FAIL ") + std::to_string(index) + " " + c.name;
        const char* sep = ": ";
        for (const auto& f : v.failures) {
            line += sep + f;
            sep = "; ";
        }
        for (const auto& n : v.notes) {
            line += sep + n;
            sep = "; ";
        }
        std::puts(line.c_str());
        std::fflush(stdout);
        failed += !v.pass();
    }
    return failed == 0 ? 0 : 1;
}
