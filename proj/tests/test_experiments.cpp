#include <gtest/gtest.h>

#include <cmath>

#include "copson/experiments.hpp"

using namespace copson;

namespace {

TEST(Counterexample, A6GrowsAndBoundStaysPut) {
    const auto tab = run_counterexample(2.0, 0.5, 0.75, {1, 10, 100});
    ASSERT_EQ(tab.rows.size(), 3u);
    for (std::size_t i = 1; i < tab.rows.size(); ++i) EXPECT_GT(tab.rows[i].A6, tab.rows[i - 1].A6);
    EXPECT_TRUE(tab.a6_nondecreasing);
    EXPECT_GT(tab.a6_growth, 2.0);
    EXPECT_TRUE(tab.upper_constant);
    EXPECT_TRUE(tab.c_below_upper);
    for (const auto& r : tab.rows) {
        EXPECT_GT(r.c_lower, 0.0);
        EXPECT_LE(r.c_lower, r.upper);
    }
}

TEST(Counterexample, UpperBoundIntegralDivergesAtZero) {
    // The outer integrand behaves like t^-1 |ln t|^0.9 near 0.
    const auto tab = run_counterexample(2.0, 0.5, 0.75, {1});
    EXPECT_TRUE(tab.upper_certified_divergent);
    EXPECT_TRUE(std::isinf(tab.rows[0].upper));
    EXPECT_TRUE(std::isfinite(tab.rows[0].upper_truncated));
    EXPECT_NE(tab.upper_reason.find("t^-1.000000"), std::string::npos) << tab.upper_reason;
}

TEST(Counterexample, RepeatedRowsIdentical) {
    const auto a = run_counterexample(2.0, 0.5, 0.75, {1});
    const auto b = run_counterexample(2.0, 0.5, 0.75, {1});
    EXPECT_EQ(a.rows, b.rows);
    EXPECT_EQ(to_csv(a).str(), to_csv(b).str());
}

TEST(Counterexample, RejectsBadParameters) {
    EXPECT_THROW(counterexample_problem(2.0, 0.8, 0.75, 1), InvalidInput);
    EXPECT_THROW(counterexample_problem(1.0, 0.5, 0.75, 1), InvalidInput);
    EXPECT_THROW(counterexample_problem(2.0, 0.5, 0.75, 0), InvalidInput);
}

TEST(Counterexample, CsvHeader) {
    const auto csv = to_csv(run_counterexample(2.0, 0.5, 0.75, {1})).str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,A_6,c_lower,upper_bound_d,upper_bound_d_truncated");
}

SweepConfig small(RegimeLabel f, int count) {
    SweepConfig c;
    c.family = f;
    c.count = count;
    c.grid = {1e-3, 1e3, 6};
    return c;
}

TEST(Sweep, RegimeARowsFiniteAndClean) {
    const auto res = run_equivalence_sweep(small(RegimeLabel::a, 6));
    ASSERT_EQ(res.records.size(), 6u);
    for (const auto& r : res.records) {
        EXPECT_TRUE(r.error.empty()) << r.error;
        EXPECT_EQ(r.regime, "a");
        EXPECT_TRUE(std::isfinite(r.ratio));
        EXPECT_GT(r.ratio, 0.0);
    }
    ASSERT_EQ(res.envelopes.size(), 1u);
    EXPECT_EQ(res.envelopes[0].flagged, 0);
    EXPECT_GE(res.envelopes[0].width(), 1.0);
}

TEST(Sweep, ZeroCountIsEmpty) {
    const auto res = run_equivalence_sweep(small(RegimeLabel::c, 0));
    EXPECT_TRUE(res.records.empty());
    const auto csv = to_csv(res.records).str();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
}

TEST(Sweep, SeedDeterminesRecords) {
    auto cfg = small(RegimeLabel::d, 3);
    const auto a = run_equivalence_sweep(cfg), b = run_equivalence_sweep(cfg);
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(to_csv(a.records).str(), to_csv(b.records).str());
    cfg.seed = 5;
    EXPECT_NE(run_equivalence_sweep(cfg).records[0].digest, a.records[0].digest);
}

TEST(Sweep, ThreadCountDoesNotChangeOutput) {
    auto cfg = small(RegimeLabel::b, 4);
    const auto one = to_csv(run_equivalence_sweep(cfg).records).str();
    cfg.threads = 3;
    EXPECT_EQ(to_csv(run_equivalence_sweep(cfg).records).str(), one);
}

TEST(Sweep, SampledParametersLandInFamily) {
    std::mt19937_64 rng(11);
    for (auto f : {RegimeLabel::a, RegimeLabel::b, RegimeLabel::c, RegimeLabel::d})
        for (int i = 0; i < 50; ++i) EXPECT_EQ(classify_regime(detail::sample_params(f, rng)).label, f);
}

TEST(Dichotomy, ExponentialWeightStabilizes) {
    const auto cases = default_dichotomy_cases();
    const auto r = classify_case(cases.front());
    EXPECT_EQ(r.expected, Finiteness::Finite);
    EXPECT_EQ(r.verdict, DichotomyVerdict::Pass) << r.note;
    // C >= A_1 = sqrt(2)/e for u = w = 1, v = e^t.
    EXPECT_GE(r.c_lower.back(), 0.99 * std::sqrt(2.0) / std::exp(1.0));
}

TEST(Dichotomy, ConstantWeightGrows) {
    for (const auto& c : default_dichotomy_cases()) {
        if (c.name != "v=1") continue;
        const auto r = classify_case(c);
        EXPECT_EQ(r.expected, Finiteness::Infinite);
        for (double g : r.growth) EXPECT_GE(g, 2.0);
        return;
    }
    FAIL() << "no v=1 case";
}

TEST(Dichotomy, EmptyInput) { EXPECT_TRUE(finiteness_dichotomy({}).empty()); }

TEST(Dichotomy, SymbolicA1) {
    Problem pb;
    pb.u = pb.w = WeightExpr::constant(1.0);
    pb.v = WeightExpr::exponential(1.0, 1.0);
    EXPECT_EQ(detail::symbolic_A1(pb), Finiteness::Finite);
    pb.v = WeightExpr::constant(1.0);
    EXPECT_EQ(detail::symbolic_A1(pb), Finiteness::Infinite);
    pb.v = WeightExpr::power(1.0, 4.0);
    EXPECT_EQ(detail::symbolic_A1(pb), Finiteness::Infinite);
    pb.v = WeightExpr{{WeightTerm{1.0, 1.0, 2.0, 0.0, 0.0, kInf}}};
    EXPECT_EQ(detail::symbolic_A1(pb), Finiteness::Unknown);
}

TEST(Dichotomy, ExpectedFollowsRegime) {
    Problem pb;
    pb.u = pb.w = WeightExpr::constant(1.0);
    pb.v = WeightExpr::exponential(1.0, 1.0);
    EXPECT_EQ(expected_finiteness(pb), Finiteness::Finite);
    pb.params = {3.0, 1.0, 2.0};
    EXPECT_EQ(expected_finiteness(pb), Finiteness::Unknown);
}

TEST(Dichotomy, DomainsNested) {
    const auto d = dichotomy_domains(8);
    ASSERT_EQ(d.size(), 4u);
    for (std::size_t i = 1; i < d.size(); ++i) {
        EXPECT_LT(d[i].t_min, d[i - 1].t_min);
        EXPECT_GT(d[i].t_max, d[i - 1].t_max);
        EXPECT_EQ(d[i].points_per_decade, 8);
    }
}

}  // namespace
