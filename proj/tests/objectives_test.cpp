#include <cmath>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "bpb/objectives.hpp"
#include "test_util.hpp"

namespace {

using bpb::ObjectiveKind;
using bpb::ObjectiveSpec;
using bpb::Point;
using bpb::SpaceSpec;

const std::string data_dir = BPB_TEST_DATA_DIR;

ObjectiveSpec spec_of(ObjectiveKind kind, int n, int m, int k = 0)
{
    ObjectiveSpec s;
    s.kind = kind;
    s.space = SpaceSpec(n, m);
    s.rastrigin_k = k;
    return s;
}

TEST(DeJong, Examples)
{
    EXPECT_EQ(bpb::dejong(Point{2, 2, 2}, 4), 0.0);
    EXPECT_EQ(bpb::dejong(Point{1, 2, 2}, 4), 1.0);
    EXPECT_EQ(bpb::dejong(Point{1, 6}, 6), 13.0);
    EXPECT_THROW(bpb::dejong(Point{1, 2}, 5), bpb::invalid_input);
}

TEST(Rastrigin, Examples)
{
    for (int m : {2, 4, 6, 10, 50})
        EXPECT_EQ(bpb::rastrigin_int(Point::filled(5, m / 2), m, 3), 0.0);
    EXPECT_NEAR(bpb::rastrigin_int(Point{1}, 4, 2), 5.0, 1e-12);
}

TEST(Rastrigin, ZeroWeightIsDeJongOnFullEnumeration)
{
    for (const auto& x : bpb::testing::enumerate_space(3, 4))
        EXPECT_EQ(bpb::rastrigin_int(x, 4, 0), bpb::dejong(x, 4)) << x.to_string();
}

TEST(Rastrigin, MatchesClosedForm)
{
    // nm + sum (x_i - h)^2 - m cos(k pi (x_i - h) / m), h = m/2, written out for n=2, m=6, k=2.
    for (const auto& x : bpb::testing::enumerate_space(2, 6)) {
        const double t0 = x[0] - 3;
        const double t1 = x[1] - 3;
        const double expected = 12.0 + t0 * t0 - 6.0 * std::cos(std::numbers::pi * t0 / 3.0) + t1 * t1
                              - 6.0 * std::cos(std::numbers::pi * t1 / 3.0);
        EXPECT_NEAR(bpb::rastrigin_int(x, 6, 2), expected, 1e-9) << x.to_string();
    }
}

TEST(Ridge, Examples)
{
    EXPECT_EQ(bpb::ridge(Point{2, 2, 2}, 4), 0.0);
    EXPECT_EQ(bpb::ridge(Point{1, 1, 1}, 4), 3.0);
    EXPECT_EQ(bpb::ridge(Point{1, 2, 1}, 4), 4.0);
}

TEST(Ridge, ConstantVectorsAreLocalMinima)
{
    const SpaceSpec s(4, 6);
    for (int i = 1; i <= 6; ++i) {
        const Point c = Point::filled(4, i);
        const double value = bpb::ridge(c, 6);
        EXPECT_EQ(value, 4.0 * std::abs(i - 3)) << "i=" << i;
        // No Hamming neighbour is lower.
        for (const auto& y : bpb::enumerate_ball(s, c, 1))
            EXPECT_GE(bpb::ridge(y, 6), value) << y.to_string();
    }
}

TEST(BuiltIns, NonNegativeWithUniqueZeroAtCenter)
{
    for (auto [n, m] : {std::pair{3, 4}, std::pair{2, 6}}) {
        const Point star = Point::filled(n, m / 2);
        for (const auto& x : bpb::testing::enumerate_space(n, m)) {
            for (double v : {bpb::dejong(x, m), bpb::rastrigin_int(x, m, 2), bpb::ridge(x, m)}) {
                EXPECT_GE(v, 0.0);
                EXPECT_EQ(v == 0.0, x == star) << x.to_string() << " value " << v;
            }
        }
    }
}

TEST(ObjectiveSpec, Validation)
{
    EXPECT_NO_THROW(spec_of(ObjectiveKind::dejong, 10, 6).validate());
    EXPECT_THROW(spec_of(ObjectiveKind::dejong, 10, 5).validate(), bpb::invalid_input);
    EXPECT_THROW(spec_of(ObjectiveKind::ridge, 4, 6).validate(), bpb::invalid_input);
    EXPECT_THROW(spec_of(ObjectiveKind::rastrigin, 10, 6, -1).validate(), bpb::invalid_input);
    ObjectiveSpec ext = spec_of(ObjectiveKind::external, 2, 3);
    EXPECT_THROW(ext.validate(), bpb::invalid_input);
    ext.command = "cat";
    EXPECT_NO_THROW(ext.validate());
}

TEST(ObjectiveKind, NamesRoundTrip)
{
    for (auto kind : {ObjectiveKind::dejong, ObjectiveKind::rastrigin, ObjectiveKind::ridge, ObjectiveKind::external})
        EXPECT_EQ(bpb::parse_objective_kind(bpb::to_string(kind)), kind);
    EXPECT_THROW(bpb::parse_objective_kind("sphere"), bpb::invalid_input);
}

TEST(ParseReply, AcceptsOnlyOneNumber)
{
    EXPECT_EQ(bpb::parse_reply_value("3.5"), 3.5);
    EXPECT_EQ(bpb::parse_reply_value(" -2 \r"), -2.0);
    EXPECT_FALSE(bpb::parse_reply_value("").has_value());
    EXPECT_FALSE(bpb::parse_reply_value("1 2").has_value());
    EXPECT_FALSE(bpb::parse_reply_value("nan").has_value());
    EXPECT_FALSE(bpb::parse_reply_value("abc").has_value());
}

TEST(Evaluate, BuiltInAtOptimum)
{
    const auto e = bpb::evaluate(spec_of(ObjectiveKind::dejong, 10, 6), Point::filled(10, 3));
    EXPECT_EQ(e.value, 0.0);
    EXPECT_THROW(bpb::evaluate(spec_of(ObjectiveKind::dejong, 10, 6), Point::filled(10, 7)), bpb::invalid_input);
}

TEST(Evaluate, ExternalScriptMatchesBuiltIn)
{
    ObjectiveSpec ext = spec_of(ObjectiveKind::external, 8, 6);
    ext.command = "python3 " + data_dir + "/dejong_eval.py 6";
    bpb::Evaluator evaluator(ext);
    bpb::Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const Point x = bpb::sample_uniform_space(ext.space, rng);
        EXPECT_EQ(evaluator.evaluate(x).value, bpb::dejong(x, 6)) << x.to_string();
    }
}

TEST(Evaluate, ExternalFailureIsReported)
{
    ObjectiveSpec ext = spec_of(ObjectiveKind::external, 3, 3);
    ext.command = data_dir + "/failing_eval.sh";
    try {
        bpb::evaluate(ext, Point{1, 2, 3});
        FAIL() << "expected an evaluation error";
    } catch (const bpb::evaluation_error& e) {
        EXPECT_EQ(e.point(), "1 2 3");
    }
}

TEST(Evaluate, NonNumericReplyIsReported)
{
    ObjectiveSpec ext = spec_of(ObjectiveKind::external, 2, 3);
    ext.command = "while read l; do echo oops; done";
    EXPECT_THROW(bpb::evaluate(ext, Point{1, 2}), bpb::evaluation_error);
}

TEST(Evaluate, TimeoutIsReported)
{
    ObjectiveSpec ext = spec_of(ObjectiveKind::external, 2, 3);
    ext.command = "sleep 5";
    ext.timeout = std::chrono::milliseconds(100);
    const auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(bpb::evaluate(ext, Point{1, 2}), bpb::evaluation_error);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
}

TEST(Evaluator, MemoizesRepeatedPoints)
{
    bpb::Evaluator evaluator(spec_of(ObjectiveKind::ridge, 5, 4));
    const Point x{1, 2, 3, 4, 1};
    const auto a = evaluator.evaluate(x);
    const auto b = evaluator.evaluate(x);
    EXPECT_EQ(a, b);
    EXPECT_EQ(evaluator.calls(), 1u);
}

TEST(Evaluator, DelayIsApplied)
{
    bpb::Evaluator evaluator(spec_of(ObjectiveKind::dejong, 5, 4), std::chrono::milliseconds(20));
    const auto first = evaluator.evaluate(Point{1, 2, 3, 4, 1});
    EXPECT_GE(first.duration, std::chrono::milliseconds(20));
    // The delay models per-point cost, so a cached point pays it too.
    const auto again = evaluator.evaluate(Point{1, 2, 3, 4, 1});
    EXPECT_GE(again.duration, std::chrono::milliseconds(20));
    EXPECT_EQ(evaluator.calls(), 1u);
}

} // namespace
