#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "copson/weights.hpp"

using namespace copson;

namespace {

// v from the counterexample family on (0, 1/2] and (1/2, inf).
WeightExpr counterexample_v(double p, double q, double m) {
    const double pc = p / (p - 1.0);
    return WeightExpr({WeightTerm{1.0, p / m + p - 1.0, (p - q) / (pc * (q - 1.0)), 0.0, 0.0, 0.5},
                       WeightTerm{1.0, 0.0, 0.0, 1.0, 0.5, kInf}});
}

}  // namespace

TEST(EvalWeight, SquareAtThree) {
    EXPECT_DOUBLE_EQ(eval_weight(WeightExpr::power(1.0, 2.0), 3.0), 9.0);
}

TEST(EvalWeight, CounterexampleSecondBranchAtOne) {
    EXPECT_NEAR(eval_weight(counterexample_v(2.0, 0.5, 0.75), 1.0), std::numbers::e, 1e-15);
}

TEST(EvalWeight, CounterexampleFirstBranch) {
    const double expected = std::pow(0.25, 11.0 / 3.0) * std::pow(std::log(4.0), -1.5);
    EXPECT_NEAR(eval_weight(counterexample_v(2.0, 0.5, 0.75), 0.25), expected, 1e-15);
    EXPECT_NEAR(expected, 3.80e-3, 1e-5);
}

TEST(EvalWeight, NegativeLogPowerAtOneIsInfinite) {
    WeightExpr w({WeightTerm{1.0, 0.0, -0.5, 0.0, 0.0, kInf}});
    EXPECT_TRUE(std::isinf(eval_weight(w, 1.0)));
    EXPECT_EQ(eval_weight(WeightExpr({WeightTerm{1.0, 0.0, 0.5, 0.0, 0.0, kInf}}), 1.0), 0.0);
}

TEST(EvalWeight, SupportIsHalfOpen) {
    auto w = WeightExpr::constant(1.0, 1.0, 2.0);
    EXPECT_EQ(eval_weight(w, 1.0), 0.0);
    EXPECT_EQ(eval_weight(w, 2.0), 1.0);
    EXPECT_EQ(eval_weight(WeightExpr::zero(), 5.0), 0.0);
}

TEST(EvalWeight, RejectsNonPositiveT) {
    EXPECT_THROW(eval_weight(WeightExpr::constant(1.0), 0.0), InvalidInput);
    EXPECT_THROW(eval_weight(WeightExpr::constant(1.0), -1.0), InvalidInput);
}

TEST(EvalWeight, OverflowSafeProduct) {
    // e^{-800} underflows on its own while the product is representable.
    WeightExpr w({WeightTerm{1.0, 100.0, 0.0, -1.0, 0.0, kInf}});
    const double t = 800.0;
    EXPECT_NEAR(std::log(eval_weight(w, t)), 100.0 * std::log(t) - t, 1e-9);
}

TEST(WeightTerm, Validation) {
    EXPECT_THROW(WeightExpr({WeightTerm{-1.0, 0, 0, 0, 0, kInf}}), InvalidInput);
    EXPECT_THROW(WeightExpr({WeightTerm{1.0, 0, 0, 0, 2.0, 1.0}}), InvalidInput);
    EXPECT_THROW(WeightExpr({WeightTerm{1.0, NAN, 0, 0, 0, kInf}}), InvalidInput);
}

TEST(IntegrateWeight, ConstantOnZeroT) {
    EXPECT_NEAR(integrate_weight(WeightExpr::constant(1.0), 0.0, 3.7), 3.7, 1e-15);
}

TEST(IntegrateWeight, ExponentialTail) {
    EXPECT_NEAR(integrate_weight(WeightExpr::exponential(1.0, -1.0), 1.0, kInf), std::exp(-1.0), 1e-15);
}

TEST(IntegrateWeight, Rectangle) {
    for (double n : {1.0, 10.0, 100.0, 1000.0})
        EXPECT_NEAR(integrate_weight(WeightExpr::constant(n, 0.0, 1.0 / n), 0.0, 1.0 / n), 1.0, 1e-14);
}

TEST(IntegrateWeight, DivergenceCertified) {
    EXPECT_TRUE(std::isinf(integrate_weight(WeightExpr::constant(1.0), 1.0, kInf)));
    EXPECT_TRUE(std::isinf(integrate_weight(WeightExpr::power(1.0, -1.0), 0.0, 1.0)));
    EXPECT_TRUE(std::isinf(integrate_weight(WeightExpr::power(1.0, -1.0), 1.0, kInf)));
    EXPECT_TRUE(std::isinf(integrate_weight(WeightExpr::exponential(1.0, 0.1), 1.0, kInf)));
    // t^-1 |ln t|^-2 is integrable at 0 but has a non-integrable pole at t = 1.
    WeightExpr w({WeightTerm{1.0, -1.0, -2.0, 0.0, 0.0, 0.5}});
    EXPECT_NEAR(integrate_weight(w, 0.0, 0.5), 1.0 / std::log(2.0), 1e-12);
    WeightExpr pole({WeightTerm{1.0, 0.0, -1.0, 0.0, 0.0, kInf}});
    EXPECT_TRUE(std::isinf(integrate_weight(pole, 0.5, 2.0)));
}

TEST(IntegrateWeight, PowerLogClosedFormMatchesQuadrature) {
    // int_0^1 t^2 |ln t|^1.5 dt = Gamma(2.5) / 3^2.5
    WeightExpr w({WeightTerm{1.0, 2.0, 1.5, 0.0, 0.0, kInf}});
    EXPECT_NEAR(integrate_weight(w, 0.0, 1.0), std::tgamma(2.5) / std::pow(3.0, 2.5), 1e-13);
    // int_1^inf t^-3 (ln t)^0.5 dt = Gamma(1.5) / 2^1.5
    WeightExpr w2({WeightTerm{1.0, -3.0, 0.5, 0.0, 0.0, kInf}});
    EXPECT_NEAR(integrate_weight(w2, 1.0, kInf), std::tgamma(1.5) / std::pow(2.0, 1.5), 1e-13);
    // Generic interval against adaptive quadrature.
    auto est = integrate([&](double t) { return eval_weight(w2, t); }, 0.3, 7.0, QuadOptions{1e-13, 0, 4000});
    EXPECT_NEAR(integrate_weight(w2, 0.3, 7.0), est.value, 1e-11 * est.value);
}

TEST(IntegrateWeight, MixedTermUsesQuadrature) {
    // t e^{-t} on (0, inf) = Gamma(2) = 1
    WeightExpr w({WeightTerm{1.0, 1.0, 0.0, -1.0, 0.0, kInf}});
    EXPECT_NEAR(integrate_weight(w, 0.0, kInf), 1.0, 1e-11);
}

TEST(IntegrateWeight, Additivity) {
    WeightExpr w = WeightExpr::power(2.0, -0.5) + WeightExpr::exponential(1.0, -0.3, 0.5, 9.0) +
                   WeightExpr({WeightTerm{1.0, 1.0, 0.7, 0.0, 0.0, 4.0}});
    for (double b : {0.2, 0.9, 1.0, 3.0, 8.0}) {
        const double lhs = integrate_weight(w, 0.1, 10.0);
        const double rhs = integrate_weight(w, 0.1, b) + integrate_weight(w, b, 10.0);
        EXPECT_NEAR(lhs, rhs, 2e-11 * lhs);
    }
}

TEST(IntegrateWeight, MonotoneInEndpoints) {
    WeightExpr w = WeightExpr::power(1.0, 0.3) + WeightExpr::exponential(0.5, -1.0);
    double prev = 0.0;
    for (double b = 0.5; b < 50.0; b *= 1.7) {
        const double cur = integrate_weight(w, 0.1, b);
        EXPECT_GE(cur, prev);
        prev = cur;
    }
    prev = kInf;
    for (double a = 0.01; a < 5.0; a *= 1.9) {
        const double cur = integrate_weight(w, a, 6.0);
        EXPECT_LE(cur, prev);
        prev = cur;
    }
}

TEST(IntegrateWeight, LinearInCoef) {
    WeightExpr w({WeightTerm{1.0, 0.5, 0.3, -0.2, 0.0, kInf}});
    const double base = integrate_weight(w, 0.2, 5.0);
    EXPECT_NEAR(integrate_weight(w.scaled(3.5), 0.2, 5.0), 3.5 * base, 1e-12 * base);
    EXPECT_NEAR(eval_weight(w.scaled(3.5), 2.0), 3.5 * eval_weight(w, 2.0), 1e-14);
}

TEST(IntegrateWeight, RejectsBadRange) {
    EXPECT_THROW(integrate_weight(WeightExpr::constant(1.0), 2.0, 1.0), InvalidInput);
    EXPECT_THROW(integrate_weight(WeightExpr::constant(1.0), -1.0, 1.0), InvalidInput);
}

TEST(SigmaTail, Examples) {
    EXPECT_NEAR(sigma_tail(WeightExpr::exponential(1.0, 1.0), 2.0, 1.0), std::exp(-1.0), 1e-15);
    EXPECT_TRUE(std::isinf(sigma_tail(WeightExpr::constant(1.0), 2.0, 1.0)));
    EXPECT_NEAR(sigma_tail(WeightExpr::exponential(1.0, 2.0), 2.0, 0.0), 0.5, 1e-15);
    auto est = integrate([](double s) { return std::exp(-2.0 * s); }, 0.0, kInf);
    EXPECT_NEAR(est.value, 0.5, 1e-10);
}

TEST(SigmaTail, VanishingWeightGivesInfinity) {
    EXPECT_TRUE(std::isinf(sigma_tail(WeightExpr::exponential(1.0, 1.0, 0.0, 3.0), 2.0, 1.0)));
    EXPECT_TRUE(std::isinf(sigma_tail(WeightExpr::zero(), 3.0, 1.0)));
}

TEST(SigmaTail, MonotoneAndScaling) {
    WeightExpr v = WeightExpr::exponential(1.0, 1.0) + WeightExpr::power(2.0, 1.5);
    const double p = 3.0;
    double prev = kInf;
    for (double t = 0.05; t < 30.0; t *= 1.5) {
        const double s = sigma_tail(v, p, t);
        EXPECT_LE(s, prev);
        prev = s;
    }
    const double lambda = 4.0;
    const double e = -1.0 / (p - 1.0);
    EXPECT_NEAR(sigma_tail(v.scaled(lambda), p, 0.7), std::pow(lambda, e) * sigma_tail(v, p, 0.7),
                1e-9 * sigma_tail(v, p, 0.7));
}

TEST(SigmaTail, MixedStretchDivergence) {
    // v = t^2 + t^3 near 0: v^{-1} ~ t^{-2} diverges at 0.
    WeightExpr v = WeightExpr::power(1.0, 2.0) + WeightExpr::power(1.0, 3.0);
    EXPECT_TRUE(std::isinf(DualWeight(v, 2.0).integral(0.0, 1.0)));
    // Tail: v^{-1} ~ t^{-3} integrable; compare with quadrature.
    auto est = integrate([](double t) { return 1.0 / (t * t + t * t * t); }, 1.0, kInf, QuadOptions{1e-12, 0, 4000});
    EXPECT_NEAR(sigma_tail(v, 2.0, 1.0), est.value, 1e-10);
    EXPECT_NEAR(est.value, 1.0 - std::log(2.0), 1e-10);
}

TEST(SigmaTail, RequiresPGreaterThanOne) {
    EXPECT_THROW(sigma_tail(WeightExpr::constant(1.0), 1.0, 1.0), InvalidInput);
}
