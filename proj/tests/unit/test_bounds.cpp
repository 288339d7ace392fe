#include <gtest/gtest.h>

#include <cmath>

#include "stratexact/bounds.hpp"
#include "stratexact/errors.hpp"
#include "stratexact/harness.hpp"
#include "stratexact/randomization.hpp"
#include "stratexact/rng.hpp"

using namespace stratexact;

namespace {

double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

double pmf(int x, int N, int G, int draws) {
  return choose(G, x) * choose(N - G, draws - x) / choose(N, draws);
}

// Two-stratum W-S bound by scanning every composition of every total.
IntRange naive_ws_two(std::array<int, 2> obs, std::array<int, 2> pop, std::array<int, 2> draws,
                      double alpha) {
  const int s = obs[0] + obs[1];
  const int total = pop[0] + pop[1];
  std::vector<double> up(total + 1, 0.0);
  std::vector<double> down(total + 1, 0.0);
  for (int g0 = 0; g0 <= pop[0]; ++g0) {
    for (int g1 = 0; g1 <= pop[1]; ++g1) {
      double ge = 0.0;
      double le = 0.0;
      for (int x0 = 0; x0 <= draws[0]; ++x0) {
        for (int x1 = 0; x1 <= draws[1]; ++x1) {
          const double p = pmf(x0, pop[0], g0, draws[0]) * pmf(x1, pop[1], g1, draws[1]);
          if (x0 + x1 >= s) ge += p;
          if (x0 + x1 <= s) le += p;
        }
      }
      up[g0 + g1] = std::max(up[g0 + g1], ge);
      down[g0 + g1] = std::max(down[g0 + g1], le);
    }
  }
  IntRange out{0, total};
  for (int t = 0; t <= total; ++t) {
    if (up[t] > alpha) {
      out.lo = t;
      break;
    }
  }
  for (int t = total; t >= 0; --t) {
    if (down[t] > alpha) {
      out.hi = t;
      break;
    }
  }
  return out;
}

}  // namespace

TEST(Ws, TotalIntervalMatchesCompositionScan) {
  Stream rng(stream_key(501, 0));
  for (int trial = 0; trial < 40; ++trial) {
    const std::array<int, 2> pop{4 + static_cast<int>(rng.below(5)), 4 + static_cast<int>(rng.below(5))};
    const std::array<int, 2> draws{1 + static_cast<int>(rng.below(pop[0])),
                                   1 + static_cast<int>(rng.below(pop[1]))};
    const std::array<int, 2> obs{static_cast<int>(rng.below(draws[0] + 1)),
                                 static_cast<int>(rng.below(draws[1] + 1))};
    const double alpha = trial % 2 == 0 ? 0.0125 : 0.05;
    const auto got = ws_total_interval({obs[0], obs[1]}, {pop[0], pop[1]}, {draws[0], draws[1]}, alpha);
    EXPECT_EQ(got, naive_ws_two(obs, pop, draws, alpha)) << "trial " << trial;
  }
}

TEST(Ws, SingleStratumEqualsStratumBound) {
  for (const auto& s : {StratumOutcome{3, 2, 1, 4}, StratumOutcome{8, 21, 3, 22},
                        StratumOutcome{0, 5, 0, 5}, StratumOutcome{6, 0, 6, 0}}) {
    const OutcomeTable t({s});
    EXPECT_EQ(ws_interval(t, 0.95), single_stratum_bound_ci(t, 0.95));
    EXPECT_EQ(esi_interval(t, 0.95), single_stratum_bound_ci(t, 0.95));
  }
  EXPECT_THROW(single_stratum_bound_ci(OutcomeTable({{1, 1, 1, 1}, {1, 1, 1, 1}}), 0.95),
               ValidationError);
}

TEST(Ws, CapRaisesIntractable) {
  const OutcomeTable t({{10, 10, 10, 10}, {10, 10, 10, 10}, {10, 10, 10, 10}});
  EXPECT_THROW(ws_interval(t, 0.95, 1000.0), IntractableError);
}

TEST(Ws, InvalidInputs) {
  EXPECT_THROW(ws_total_interval({}, {}, {}, 0.05), ValidationError);
  EXPECT_THROW(ws_total_interval({3}, {4}, {2}, 0.05), ValidationError);
  EXPECT_THROW(ws_interval(OutcomeTable({{1, 1, 1, 1}}), 1.0), ValidationError);
}

TEST(Bounds, CaseStudyParameters) {
  const auto t = case_study_table();
  const auto ws = ws_interval(t, 0.95);
  const auto esi = esi_interval(t, 0.95);
  EXPECT_NEAR(ws.lo, 0.0196, 5e-5);
  EXPECT_NEAR(ws.hi, 0.3824, 5e-5);
  EXPECT_NEAR(esi.lo, -0.0784, 5e-5);
  EXPECT_NEAR(esi.hi, 0.4510, 5e-5);
  EXPECT_GE(esi.width(), ws.width());
}

TEST(Bounds, NestedInLevel) {
  Stream rng(stream_key(502, 0));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<StratumOutcome> s;
    for (int k = 0; k < 2; ++k) {
      const int m = 3 + static_cast<int>(rng.below(4));
      const int c = 3 + static_cast<int>(rng.below(4));
      const int a = static_cast<int>(rng.below(m + 1));
      const int b = static_cast<int>(rng.below(c + 1));
      s.push_back({a, m - a, b, c - b});
    }
    const OutcomeTable t(s);
    const auto w90 = ws_interval(t, 0.90);
    const auto w95 = ws_interval(t, 0.95);
    const auto e90 = esi_interval(t, 0.90);
    const auto e95 = esi_interval(t, 0.95);
    EXPECT_LE(w95.lo, w90.lo);
    EXPECT_GE(w95.hi, w90.hi);
    EXPECT_LE(e95.lo, e90.lo);
    EXPECT_GE(e95.hi, e90.hi);
  }
}

TEST(Bounds, RelativeRiskConventions) {
  EXPECT_EQ(rr_from_bounds({{2, 6}, {3, 4}}), (Interval{0.5, 2.0}));
  EXPECT_EQ(rr_from_bounds({{0, 6}, {3, 4}}).lo, 0.0);
  EXPECT_EQ(rr_from_bounds({{2, 6}, {0, 4}}).hi, kInfinity);
  EXPECT_EQ(rr_from_bounds({{2, 6}, {0, 0}}), (Interval{kInfinity, kInfinity}));
  EXPECT_EQ(rr_from_bounds({{0, 0}, {0, 0}}), (Interval{0.0, kInfinity}));
  const auto t = case_study_table();
  const auto rr = rr_bound_interval(t, 0.95, BoundSource::ESI);
  const auto b = esi_parameter_bounds(t, 0.95);
  EXPECT_DOUBLE_EQ(rr.lo, static_cast<double>(b.treated_ones.lo) / b.control_ones.hi);
  EXPECT_DOUBLE_EQ(rr.hi, static_cast<double>(b.treated_ones.hi) / b.control_ones.lo);
}

TEST(Bounds, CoverAtLeastNominal) {
  const PotentialTable v({{2, 6, 1, 11}, {1, 4, 2, 13}});
  const double truth = tau(v).value();
  const std::vector<int> m{10, 10};
  int ws_cover = 0;
  int esi_cover = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const auto obs = induced_outcome(v, sample_assignment(v, m, stream_key(503, r)));
    ws_cover += ws_interval(obs, 0.95).contains(truth);
    esi_cover += esi_interval(obs, 0.95).contains(truth);
  }
  EXPECT_GE(ws_cover, 0.93 * reps);
  EXPECT_GE(esi_cover, 0.93 * reps);
}
