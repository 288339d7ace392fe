#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stratexact/errors.hpp"
#include "stratexact/model.hpp"

using namespace stratexact;

TEST(Design, RejectsEmptyArms) {
  EXPECT_THROW(Design({{4, 0}}), ValidationError);
  EXPECT_THROW(Design({{4, 4}}), ValidationError);
  EXPECT_THROW(Design(std::vector<StratumSize>{}), ValidationError);
  EXPECT_NO_THROW(Design({{2, 1}}));
}

TEST(Design, DerivedTotals) {
  const Design d({{10, 4}, {6, 3}});
  EXPECT_EQ(d.n(), 16);
  EXPECT_EQ(d.m(), 7);
  EXPECT_EQ(d.balanced_count(), 1);
}

TEST(OutcomeTable, DesignFollowsCounts) {
  const OutcomeTable t({{8, 21, 3, 22}, {8, 14, 2, 24}});
  EXPECT_EQ(t.design()[0].n, 54);
  EXPECT_EQ(t.design()[0].m, 29);
  EXPECT_EQ(t.design()[1].n, 48);
  EXPECT_EQ(t.design()[1].m, 22);
}

TEST(Tau, PublishedScenarios) {
  const PotentialTable a({{10, 10, 10, 10}, {10, 10, 10, 10}});
  EXPECT_EQ(tau(a).numerator, 0);
  EXPECT_EQ(tau(a).n, 80);
  const PotentialTable b({{3, 8, 4, 5}, {10, 19, 1, 0}});
  EXPECT_EQ(tau(b).numerator, 22);
  EXPECT_EQ(tau(b).n, 50);
  EXPECT_DOUBLE_EQ(tau(b).value(), 0.44);
  const PotentialTable none({{3, 0, 0, 5}, {2, 0, 0, 1}});
  EXPECT_EQ(tau(none).numerator, 0);
}

TEST(TauHat, CaseStudyAndEdges) {
  const OutcomeTable t({{8, 21, 3, 22}, {8, 14, 2, 24}});
  EXPECT_NEAR(tau_hat(t), 0.2174, 5e-5);
  EXPECT_DOUBLE_EQ(tau_hat(OutcomeTable({{0, 3, 0, 4}})), 0.0);
  EXPECT_DOUBLE_EQ(tau_hat(OutcomeTable({{3, 0, 0, 4}})), 1.0);
  EXPECT_DOUBLE_EQ(tau_hat_stratum({8, 21, 3, 22}), 8.0 / 29 - 3.0 / 25);
}

TEST(TauHat, MatchesRationalOracle) {
  const OutcomeTable t({{8, 21, 3, 22}, {8, 14, 2, 24}});
  const auto r = oracle::tau_hat({t[0], t[1]});
  EXPECT_DOUBLE_EQ(tau_hat(t), static_cast<double>(r.num) / r.den);
}

TEST(TauHat, UnbiasedOverAllAllocations) {
  // Averaging over every assignment recovers tau(v) exactly.
  for (const auto& v : {StratumPotential{1, 2, 1, 2}, StratumPotential{0, 3, 0, 2},
                        StratumPotential{2, 0, 3, 1}}) {
    const int n = v.total();
    for (int m = 1; m < n; ++m) {
      const auto s = oracle::unpack(v);
      oracle::Rational sum;
      const auto masks = oracle::subsets(n, m);
      for (auto mask : masks) sum = sum + oracle::tau_hat({oracle::observe(s, mask)});
      const auto mean = sum * oracle::Rational(1, static_cast<std::int64_t>(masks.size()));
      EXPECT_EQ(mean, oracle::Rational(v.effect(), n));
    }
  }
}

TEST(PotentialTable, CheckAgainstDesign) {
  const PotentialTable v({{1, 1, 1, 1}, {2, 2, 2, 0}});
  EXPECT_NO_THROW(v.check_against(Design({{4, 2}, {6, 3}})));
  EXPECT_THROW(v.check_against(Design({{4, 2}, {5, 3}})), ValidationError);
  EXPECT_THROW(v.check_against(Design({{4, 2}})), ValidationError);
  EXPECT_EQ(v.treated_ones(), 2 + 4);
  EXPECT_EQ(v.control_ones(), 2 + 4);
}

TEST(NoEffectCompletion, KeepsResponses) {
  const OutcomeTable t({{2, 1, 3, 4}});
  const auto v = no_effect_completion(t);
  EXPECT_EQ(v[0], (StratumPotential{5, 0, 0, 5}));
}

TEST(Interval, WidthAndContains) {
  const Interval i{-0.25, 0.5};
  EXPECT_DOUBLE_EQ(i.width(), 0.75);
  EXPECT_TRUE(i.contains(0.5));
  EXPECT_FALSE(i.contains(0.51));
}
