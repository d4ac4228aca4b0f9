#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "copson/conditions.hpp"

using namespace copson;

namespace {

Problem unit_problem(double p, double q, double m, double v_rate = 1.0) {
    Problem pb;
    pb.params = {p, q, m};
    pb.u = WeightExpr::constant(1.0);
    pb.v = WeightExpr::exponential(1.0, v_rate);
    pb.w = WeightExpr::constant(1.0);
    pb.grid = {1e-4, 1e4, 10};
    return pb;
}

Problem counterexample(int n) {
    const double p = 2.0, q = 0.5, m = 0.75, pc = p / (p - 1.0);
    Problem pb;
    pb.params = {p, q, m};
    pb.u = WeightExpr::constant(1.0);
    pb.v = WeightExpr({WeightTerm{1.0, p / m + p - 1.0, (p - q) / (pc * (q - 1.0)), 0.0, 0.0, 0.5},
                       WeightTerm{1.0, 0.0, 0.0, 1.0, 0.5, kInf}});
    pb.w = WeightExpr::constant(n, 0.0, 1.0 / n);
    pb.grid = {1e-8, 1e3, 8};
    return pb;
}

const double kE = std::numbers::e;

}  // namespace

TEST(ClassifyRegime, Boundaries) {
    EXPECT_EQ(classify_regime({2, 2, 2}).label, RegimeLabel::a);
    EXPECT_EQ(classify_regime({2, 1, 3}).label, RegimeLabel::b);
    EXPECT_EQ(classify_regime({2, 2, 1}).label, RegimeLabel::c);
    EXPECT_EQ(classify_regime({2, 0.5, 0.75}).label, RegimeLabel::d);
    EXPECT_EQ(classify_regime({1, 1, 1}).label, RegimeLabel::a_tilde);
    EXPECT_EQ(classify_regime({1, 0.5, 1}).label, RegimeLabel::b_tilde);
    EXPECT_EQ(classify_regime({1, 1, 0.5}).label, RegimeLabel::c_tilde);
    EXPECT_EQ(classify_regime({1, 0.5, 0.5}).label, RegimeLabel::d_tilde);
    EXPECT_EQ(classify_regime({2, 2, 1}).starred, std::optional<std::string>("A_4*"));
    EXPECT_THROW(classify_regime({0.5, 1, 1}), InvalidInput);
}

TEST(EvalCondition, A1ClosedForm) {
    const auto cv = eval_condition(unit_problem(2, 2, 2), "A_1");
    EXPECT_NEAR(cv.value / (std::sqrt(2.0) / kE), 1.0, 1e-6);
    ASSERT_TRUE(cv.argmax.has_value());
    EXPECT_NEAR(*cv.argmax, 2.0, 1e-3);
}

TEST(EvalCondition, A1FasterWeight) {
    const auto cv = eval_condition(unit_problem(2, 2, 2, 2.0), "A_1");
    EXPECT_NEAR(cv.value / (1.0 / (2.0 * kE)), 1.0, 1e-6);
}

TEST(EvalCondition, ConstantVIsInfinite) {
    auto pb = unit_problem(2, 2, 2);
    pb.v = WeightExpr::constant(1.0);
    const auto cv = eval_condition(pb, "A_1");
    EXPECT_TRUE(std::isinf(cv.value));
    EXPECT_EQ(cv.diverging_layer, "sigma");
    EXPECT_TRUE(std::isinf(theorem_bound(pb).value));
}

TEST(EvalCondition, InapplicableName) {
    EXPECT_THROW(eval_condition(unit_problem(2, 2, 2), "A_2"), InvalidInput);
    EXPECT_THROW(eval_condition(unit_problem(2, 2, 2), "At_1"), InvalidInput);
    EXPECT_THROW(eval_condition(unit_problem(2, 2, 2), "B_7"), InvalidInput);
}

// p=2, q=1, m=3, v=e^t: the inner sup factors as e^{-t} sup_x x^a e^{-x}.
TEST(EvalCondition, A2A3ClosedForms) {
    const auto pb = unit_problem(2, 1, 3);
    const double a2 = std::sqrt(std::pow(2.0 / 3.0, 2.0 / 3.0) * std::exp(-2.0 / 3.0));
    const double a3 = std::sqrt(0.75 * std::tgamma(7.0 / 3.0) * std::pow(1.0 / 3.0, 1.0 / 3.0) * std::exp(-1.0 / 3.0));
    EXPECT_NEAR(eval_condition(pb, "A_2").value / a2, 1.0, 1e-5);
    EXPECT_NEAR(eval_condition(pb, "A_3").value / a3, 1.0, 1e-5);
}

// q = 1 makes r/q' = 0; phi(t) = (3/5) t^{5/3} for m = 3/2.
TEST(EvalCondition, A6ClosedFormAtQEqualOne) {
    const auto pb = unit_problem(2, 1, 1.5);
    const double a6 = std::sqrt(9.0 / 25.0 * std::tgamma(13.0 / 3.0));
    EXPECT_NEAR(eval_condition(pb, "A_6").value / a6, 1.0, 1e-5);
}

TEST(EvalCondition, A4AndStarredClosedForms) {
    auto pb = unit_problem(2, 3, 1);
    const double a4s = std::pow(2.0 / 3.0, 1.0 / 3.0) * std::exp(-1.0 / 3.0);
    EXPECT_NEAR(eval_condition(pb, "A_4*").value / a4s, 1.0, 1e-6);
    EXPECT_NEAR(eval_condition(pb, "A_4").value / (std::sqrt(2.0) * a4s), 1.0, 1e-6);
}

TEST(BoundSum, StarredRatioIsOneWithFiniteTail) {
    for (auto par : {Parameters{2, 3, 1}, Parameters{3, 1, 2}, Parameters{2, 0.5, 0.75}}) {
        auto pb = unit_problem(par.p, par.q, par.m);
        const auto tb = theorem_bound(pb);
        ASSERT_TRUE(tb.starred_ratio.has_value());
        EXPECT_NEAR(*tb.starred_ratio, 1.0, 1e-4) << par.p << " " << par.q << " " << par.m;
        EXPECT_TRUE(tb.side_condition);
        EXPECT_EQ(tb.breakdown.size(), 3u);
    }
}

TEST(BoundSum, RegimeASingleCondition) {
    const auto tb = theorem_bound(unit_problem(2, 2, 2));
    EXPECT_EQ(tb.name, "bound_a");
    EXPECT_NEAR(tb.value, std::sqrt(2.0) / kE, 1e-6);
}

TEST(BoundSum, CounterexampleFinite) {
    const auto tb = theorem_bound(counterexample(10));
    EXPECT_EQ(tb.name, "bound_d");
    EXPECT_TRUE(std::isfinite(tb.value));
    EXPECT_GT(tb.value, 0.0);
}

TEST(TildeConditions, ClosedForms) {
    // At_1 = sup (t/sqrt 2) e^{-t} = 1/(sqrt 2 e).
    EXPECT_NEAR(eval_condition(unit_problem(1, 2, 2), "At_1").value * std::sqrt(2.0) * kE, 1.0, 1e-6);
    // q = 1/2, q' = -1: At_2 = sup_x x^{1/2} e^{-x} * int t e^{-t}.
    auto pb = unit_problem(1, 0.5, 2);
    EXPECT_NEAR(eval_condition(pb, "At_2").value / (std::sqrt(0.5) * std::exp(-0.5)), 1.0, 1e-5);
    const auto tb = theorem_bound(pb);
    EXPECT_EQ(tb.name, "bound_b~");
    EXPECT_TRUE(std::isfinite(tb.value));
}

TEST(TildeConditions, CAndDRegimesFinite) {
    for (auto par : {Parameters{1, 2, 0.5}, Parameters{1, 0.5, 0.5}}) {
        const auto tb = theorem_bound(unit_problem(par.p, par.q, par.m));
        EXPECT_TRUE(std::isfinite(tb.value)) << tb.name;
        EXPECT_GT(tb.value, 0.0);
    }
}

TEST(Invariants, Homogeneity) {
    const double lam = 3.0;
    for (auto par : {Parameters{2, 2, 2}, Parameters{2, 1, 3}, Parameters{2, 3, 1}, Parameters{3, 1, 2}}) {
        const auto base_pb = unit_problem(par.p, par.q, par.m);
        const auto reg = classify_regime(par);
        auto sv = base_pb, sw = base_pb, su = base_pb;
        sv.v = base_pb.v.scaled(lam);
        sw.w = base_pb.w.scaled(lam);
        su.u = base_pb.u.scaled(lam);
        for (const auto& n : reg.conditions) {
            const double b = eval_condition(base_pb, n).value;
            EXPECT_NEAR(eval_condition(sv, n).value / b, std::pow(lam, -1.0 / par.p), 1e-6) << n;
            EXPECT_NEAR(eval_condition(sw, n).value / b, std::pow(lam, 1.0 / par.q), 1e-6) << n;
            EXPECT_NEAR(eval_condition(su, n).value / b, std::pow(lam, 1.0 / par.m), 1e-6) << n;
        }
    }
}

TEST(Invariants, DomainExhaustionIsMonotone) {
    for (auto par : {Parameters{2, 2, 2}, Parameters{2, 1, 3}, Parameters{3, 1, 2}}) {
        auto pb = unit_problem(par.p, par.q, par.m);
        pb.grid = {1e-2, 1e1, 10};
        double prev = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double v = theorem_bound(pb).value;
            EXPECT_GE(v, prev * (1.0 - 1e-9));
            prev = v;
            pb.grid = pb.grid.widened(10.0);
        }
    }
}

TEST(Invariants, A1BoundedByA6) {
    for (auto par : {Parameters{2, 1, 1.5}, Parameters{3, 1, 2}, Parameters{3, 2, 1}}) {
        const auto pb = unit_problem(par.p, par.q, par.m);
        const double a1 = eval_condition(pb, "A_1").value;
        const double a6 = eval_condition(pb, "A_6").value;
        EXPECT_TRUE(std::isfinite(a6));
        EXPECT_LE(a1, 4.0 * a6);
    }
}

TEST(TruncationSensitivity, SmallForDecayingIntegrand) {
    const auto pb = unit_problem(2, 2, 2);
    const double base = eval_condition(pb, "A_1").value;
    EXPECT_LT(truncation_sensitivity(pb, "A_1", base), 1e-8);
    const auto tb = theorem_bound(pb, true);
    ASSERT_TRUE(tb.breakdown[0].truncation_delta.has_value());
}
