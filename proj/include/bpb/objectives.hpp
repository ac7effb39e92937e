#pragma once

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>

#include "bpb/error.hpp"
#include "bpb/space.hpp"
#include "bpb/subprocess.hpp"

namespace bpb {

namespace detail {

inline int half_alphabet(int m)
{
    if (m % 2 != 0)
        throw invalid_input("built-in test functions need an even m, got " + std::to_string(m));
    return m / 2;
}

} // namespace detail

/// Integer De Jong function: sum of (x_i - m/2)^2.
inline double dejong(const Point& x, int m)
{
    const int mid = detail::half_alphabet(m);
    double sum = 0.0;
    for (int c : x)
        sum += static_cast<double>((c - mid) * (c - mid));
    return sum;
}

/// Integer Rastrigin-type function: nm + sum[(x_i - m/2)^2 - m cos(k pi (x_i - m/2) / m)].
inline double rastrigin_int(const Point& x, int m, int k)
{
    const int mid = detail::half_alphabet(m);
    if (k < 0)
        throw invalid_input("rastrigin k must be >= 0");
    double sum = static_cast<double>(x.size()) * m;
    for (int c : x) {
        const double d = c - mid;
        sum += d * d - m * std::cos(k * std::numbers::pi * d / m);
    }
    return sum;
}

/// Ridge function: sum |x_i - m/2| + sum_{i<n} |x_i - x_{i+1}| + |x_n - x_1|.
inline double ridge(const Point& x, int m)
{
    const int mid = detail::half_alphabet(m);
    const std::size_t n = x.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += std::abs(x[i] - mid);
        sum += std::abs(x[i] - x[(i + 1) % n]);
    }
    return sum;
}

enum class ObjectiveKind : std::uint8_t { dejong = 0, rastrigin = 1, ridge = 2, external = 3 };

inline std::string_view to_string(ObjectiveKind kind)
{
    switch (kind) {
    case ObjectiveKind::dejong: return "dejong";
    case ObjectiveKind::rastrigin: return "rastrigin";
    case ObjectiveKind::ridge: return "ridge";
    case ObjectiveKind::external: return "external";
    }
    return "unknown";
}

inline ObjectiveKind parse_objective_kind(std::string_view name)
{
    for (auto kind : {ObjectiveKind::dejong, ObjectiveKind::rastrigin, ObjectiveKind::ridge, ObjectiveKind::external}) {
        if (to_string(kind) == name)
            return kind;
    }
    throw invalid_input("unknown objective function '" + std::string(name) + "'");
}

struct ObjectiveSpec
{
    ObjectiveKind kind = ObjectiveKind::dejong;
    SpaceSpec space{2, 2};
    int rastrigin_k = 0;
    /// Shell command for ObjectiveKind::external.
    std::string command;
    std::chrono::milliseconds timeout{10'000};

    /// Built-ins need m even and m < n so that (m/2, ..., m/2) is the known optimum.
    void validate() const
    {
        if (kind == ObjectiveKind::external) {
            if (command.empty())
                throw invalid_input("external objective needs a command");
            return;
        }
        if (space.m() % 2 != 0)
            throw invalid_input("built-in test functions need an even m, got " + std::to_string(space.m()));
        if (space.m() >= space.n())
            throw invalid_input("built-in test functions need m < n (m=" + std::to_string(space.m())
                                + ", n=" + std::to_string(space.n()) + ")");
        if (kind == ObjectiveKind::rastrigin && rastrigin_k < 0)
            throw invalid_input("rastrigin k must be >= 0");
    }
};

struct Evaluation
{
    Point point;
    double value = 0.0;
    std::chrono::nanoseconds duration{0};

    friend bool operator==(const Evaluation& a, const Evaluation& b)
    {
        return a.point == b.point && a.value == b.value;
    }
};

/// Value of a built-in objective. Not for ObjectiveKind::external.
inline double evaluate_builtin(const ObjectiveSpec& spec, const Point& x)
{
    switch (spec.kind) {
    case ObjectiveKind::dejong: return dejong(x, spec.space.m());
    case ObjectiveKind::rastrigin: return rastrigin_int(x, spec.space.m(), spec.rastrigin_k);
    case ObjectiveKind::ridge: return ridge(x, spec.space.m());
    case ObjectiveKind::external: break;
    }
    throw invalid_input("external objectives need an Evaluator");
}

/// Parses one evaluator reply: a single finite decimal number, surrounding blanks allowed.
inline std::optional<double> parse_reply_value(const std::string& line)
{
    const char* begin = line.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE || !std::isfinite(v))
        return std::nullopt;
    for (const char* p = end; *p; ++p) {
        if (*p != ' ' && *p != '\t' && *p != '\r')
            return std::nullopt;
    }
    return v;
}

/**
 * Objective evaluation in one execution context.
 *
 * Records the wall-clock duration of each call. Values are memoized, so a
 * repeated point does not reach the objective again. The optional artificial
 * delay stands for the cost of producing one sample point and is paid on
 * every call, cached or not, so it scales with the number of points drawn. An
 * external objective starts its child process on first use and keeps it for
 * the lifetime of the evaluator.
 */
class Evaluator
{
public:
    explicit Evaluator(ObjectiveSpec spec, std::chrono::microseconds delay = {}, bool memoize = true)
        : spec_(std::move(spec)), delay_(delay), memoize_(memoize)
    {
        spec_.validate();
    }

    const ObjectiveSpec& spec() const noexcept { return spec_; }
    std::uint64_t calls() const noexcept { return calls_; }

    Evaluation evaluate(const Point& x)
    {
        const auto start = std::chrono::steady_clock::now();
        double value = 0.0;
        const auto cached = memoize_ ? cache_.find(x) : cache_.end();
        if (cached != cache_.end()) {
            value = cached->second;
        } else {
            value = compute(x);
            ++calls_;
            if (memoize_)
                cache_.emplace(x, value);
        }
        if (delay_.count() > 0)
            std::this_thread::sleep_for(delay_);
        const auto elapsed = std::chrono::steady_clock::now() - start;
        return {x, value, std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed)};
    }

private:
    double compute(const Point& x)
    {
        if (spec_.kind != ObjectiveKind::external)
            return evaluate_builtin(spec_, x);
        if (!process_)
            process_ = std::make_unique<LineProcess>(spec_.command);
        const auto reply = process_->exchange(x.to_string(), spec_.timeout);
        if (!reply) {
            process_.reset();
            throw evaluation_error("external evaluator failed, exited or timed out", x.to_string());
        }
        const auto value = parse_reply_value(*reply);
        if (!value)
            throw evaluation_error("external evaluator replied with a non-numeric value '" + *reply + "'",
                                   x.to_string());
        return *value;
    }

    ObjectiveSpec spec_;
    std::chrono::microseconds delay_;
    bool memoize_;
    std::uint64_t calls_ = 0;
    std::unordered_map<Point, double, PointHash> cache_;
    std::unique_ptr<LineProcess> process_;
};

/// One-off evaluation (spawns and tears down the external process if needed).
inline Evaluation evaluate(const ObjectiveSpec& spec, const Point& x)
{
    detail::require_point(spec.space, x);
    Evaluator evaluator(spec, {}, false);
    return evaluator.evaluate(x);
}

} // namespace bpb
