#include <gtest/gtest.h>

#include "invariant_suite.hpp"

using namespace copson;

namespace {

const invariants::Corpus& corpus() {
    static const auto c = invariants::seeded_corpus();
    return c;
}

class Invariant : public ::testing::TestWithParam<std::size_t> {};

TEST_P(Invariant, Holds) {
    const auto checks = invariants::all_checks();
    const auto& [name, check] = checks.at(GetParam());
    invariants::Result r;
    r.name = name;
    invariants::detail::Checker c(r);
    check(c, corpus());
    EXPECT_TRUE(r.pass) << name << ": " << r.detail;
}

INSTANTIATE_TEST_SUITE_P(Suite, Invariant, ::testing::Range<std::size_t>(0, invariants::all_checks().size()));

TEST(InvariantCorpus, ThreePerRegime) {
    ASSERT_EQ(corpus().problems.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i)
        EXPECT_EQ(classify_regime(corpus().problems[i].params).label, static_cast<RegimeLabel>(i / 3));
}

}  // namespace
