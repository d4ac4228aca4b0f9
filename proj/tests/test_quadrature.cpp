#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "copson/quadrature.hpp"

using namespace copson;

TEST(GridSpec, NodeCountAndSnapping) {
    GridSpec g{1e-3, 1e3, 10};
    EXPECT_EQ(g.node_count(), 61u);
    auto n = g.nodes();
    ASSERT_EQ(n.size(), 61u);
    EXPECT_EQ(n.front(), 1e-3);
    EXPECT_EQ(n[30], 1.0);
    EXPECT_EQ(n.back(), 1e3);
    for (std::size_t i = 1; i < n.size(); ++i) EXPECT_NEAR(n[i] / n[i - 1], std::pow(10.0, 0.1), 1e-12);
}

TEST(GridSpec, Validation) {
    EXPECT_THROW((GridSpec{0.0, 1.0, 10}.validate()), InvalidInput);
    EXPECT_THROW((GridSpec{2.0, 1.0, 10}.validate()), InvalidInput);
    EXPECT_THROW((GridSpec{1.0, 2.0, 0}.validate()), InvalidInput);
    EXPECT_THROW((GridSpec{1.0, INFINITY, 3}.validate()), InvalidInput);
}

TEST(Integrate, Constant) {
    auto e = integrate([](double) { return 1.0; }, 0.0, 1.0);
    EXPECT_NEAR(e.value, 1.0, 1e-10);
    EXPECT_TRUE(e.converged);
    EXPECT_TRUE(std::isfinite(e.abs_error));
}

TEST(Integrate, ExponentialTail) {
    EXPECT_NEAR(integrate([](double t) { return std::exp(-t); }, 0.0, INFINITY).value, 1.0, 1e-10);
}

TEST(Integrate, GammaTwo) {
    EXPECT_NEAR(integrate([](double t) { return t * std::exp(-t); }, 0.0, INFINITY).value, 1.0, 1e-10);
}

TEST(Integrate, EndpointSingularity) {
    // int_0^1 t^-1/2 = 2 and int_0^1 (1-t)^-1/2 = 2
    EXPECT_NEAR(integrate([](double t) { return 1.0 / std::sqrt(t); }, 0.0, 1.0).value, 2.0, 1e-9);
    EXPECT_NEAR(integrate([](double t) { return 1.0 / std::sqrt(1.0 - t); }, 0.0, 1.0).value, 2.0, 1e-7);
}

TEST(Integrate, BreakpointsAndDeterminism) {
    auto f = [](double t) { return t < 2.0 ? 1.0 : 0.0; };
    const double br[] = {2.0};
    auto a = integrate(f, 0.0, 5.0, {}, br);
    auto b = integrate(f, 0.0, 5.0, {}, br);
    EXPECT_NEAR(a.value, 2.0, 1e-12);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.abs_error, b.abs_error);
}

TEST(Integrate, InfiniteValuePropagates) {
    auto e = integrate([](double t) { return t > 0.5 && t < 0.6 ? INFINITY : 1.0; }, 0.0, 1.0);
    EXPECT_TRUE(std::isinf(e.value));
}

TEST(Integrate, BudgetExhaustionFlagged) {
    QuadOptions o;
    o.rel_tol = 1e-15;
    o.max_intervals = 3;
    auto e = integrate([](double t) { return std::sin(50.0 * t) + 1.0; }, 0.0, 10.0, o);
    EXPECT_FALSE(e.converged);
    EXPECT_GT(e.value, 0.0);
}

TEST(Integrate, NaNRejected) {
    EXPECT_THROW(integrate([](double) { return NAN; }, 0.0, 1.0), InvalidInput);
    EXPECT_THROW(integrate([](double) { return 1.0; }, 1.0, 0.5), InvalidInput);
}

TEST(Integrate, Linearity) {
    auto f = [](double t) { return std::exp(-t) * t; };
    auto g = [](double t) { return 1.0 / (1.0 + t * t); };
    const double a = 2.5, b = 0.75;
    auto lin = integrate([&](double t) { return a * f(t) + b * g(t); }, 0.0, INFINITY);
    auto sf = integrate(f, 0.0, INFINITY);
    auto sg = integrate(g, 0.0, INFINITY);
    EXPECT_NEAR(lin.value, a * sf.value + b * sg.value, 2.0 * (lin.abs_error + a * sf.abs_error + b * sg.abs_error) + 1e-14);
    EXPECT_NEAR(sg.value, std::numbers::pi / 2.0, 1e-9);
}

TEST(AdaptiveRule, ReintegratesSameShape) {
    auto f = [](double t) { return std::pow(t, 0.3) * std::exp(-t); };
    auto rule = adaptive_rule(f, 0.0, INFINITY, QuadOptions{1e-12, 0, 4000});
    double s = 0.0;
    for (const auto& n : rule) s += n.weight * f(n.t);
    EXPECT_NEAR(s, std::tgamma(1.3), 1e-10);
    for (std::size_t i = 1; i < rule.size(); ++i) EXPECT_LE(rule[i - 1].t, rule[i].t);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
    for (int n : {1, 4, 8, 16}) {
        const auto& r = gauss_legendre(n);
        double s = 0.0;
        for (const auto& [x, w] : r) s += w * std::pow(x, 2 * n - 2);
        EXPECT_NEAR(s, 2.0 / (2 * n - 1), 1e-14);
    }
    EXPECT_THROW(gauss_legendre(0), InvalidInput);
}

TEST(SupOnInterval, Parabola) {
    GridSpec g{1e-6, 1e6, 10};
    auto e = sup_on_interval([](double t) { return t * (1.0 - t); }, 0.0, 1.0, g);
    EXPECT_NEAR(e.value, 0.25, 1e-12);
    ASSERT_TRUE(e.argmax.has_value());
    EXPECT_NEAR(*e.argmax, 0.5, 1e-5);
}

TEST(SupOnInterval, TExpHalf) {
    GridSpec g{1e-6, 1e6, 10};
    auto e = sup_on_interval([](double t) { return t * std::exp(-t / 2.0); }, 0.0, INFINITY, g);
    EXPECT_NEAR(e.value, 2.0 / std::numbers::e, 1e-12);
    EXPECT_NEAR(*e.argmax, 2.0, 1e-5);
}

TEST(SupOnInterval, Constant) {
    GridSpec g{1e-2, 1e2, 5};
    auto e = sup_on_interval([](double) { return 3.25; }, 0.0, INFINITY, g);
    EXPECT_EQ(e.value, 3.25);
    EXPECT_TRUE(e.argmax.has_value());
}

TEST(SupOnInterval, InfinityPropagates) {
    GridSpec g{1e-2, 1e2, 5};
    auto e = sup_on_interval([](double t) { return t > 10.0 ? INFINITY : t; }, 0.0, INFINITY, g);
    EXPECT_TRUE(std::isinf(e.value));
}

TEST(SupOnInterval, RefinementMonotonicity) {
    auto f = [](double t) { return std::pow(t, 0.7) * std::exp(-0.3 * t) * (1.0 + 0.2 * std::sin(3.0 * std::log(t))); };
    double prev = 0.0;
    for (int ppd : {2, 4, 8, 16, 32}) {
        auto e = sup_on_interval(f, 0.0, INFINITY, GridSpec{1e-3, 1e3, ppd});
        EXPECT_GE(e.value, prev - 1e-10);
        prev = e.value;
    }
}
