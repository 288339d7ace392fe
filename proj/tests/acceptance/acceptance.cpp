// Acceptance suite. Prints one PASS/FAIL line per criterion; an optional
// argument selects a single criterion.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "stratexact/bounds.hpp"
#include "stratexact/enumeration.hpp"
#include "stratexact/harness.hpp"
#include "stratexact/methods.hpp"
#include "stratexact/randomization.hpp"
#include "stratexact/rng.hpp"

using namespace stratexact;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string show(const Interval& iv) { return fmt("[%.4f, %.4f]", iv.lo, iv.hi); }

bool near(const Interval& got, const Interval& want, double tol) {
  return std::abs(got.lo - want.lo) <= tol && std::abs(got.hi - want.hi) <= tol;
}

OutcomeTable random_table(Stream& rng, const std::vector<StratumSize>& sizes) {
  std::vector<StratumOutcome> s;
  for (const auto& z : sizes) {
    const int a = static_cast<int>(rng.below(z.m + 1));
    const int c = static_cast<int>(rng.below(z.n - z.m + 1));
    s.push_back({a, z.m - a, c, z.n - z.m - c});
  }
  return OutcomeTable(s);
}

// 1. Case study intervals.
Outcome criterion_1() {
  constexpr double kWaldTol = 0.005;
  constexpr double kPermTol = 0.03;
  constexpr double kWsTol = 0.02;
  constexpr double kEsiTol = 0.06;
  constexpr int kSeeds = 20;
  constexpr int kR = 1000;
  constexpr double kBudgetSeconds = 600.0;
  const auto start = Clock::now();
  const auto t = case_study_table();
  std::ostringstream os;
  bool pass = true;
  auto check = [&](const char* name, const Interval& got, const Interval& want, double tol) {
    const bool ok = near(got, want, tol);
    pass = pass && ok;
    os << ' ' << name << '=' << show(got) << (ok ? "" : "(miss)");
  };
  check("wald", wald_ci(t, 0.95).interval, {0.06, 0.38}, kWaldTol);
  Interval spt{0.0, 0.0};
  Interval cpt{0.0, 0.0};
  for (int s = 1; s <= kSeeds; ++s) {
    SptOptions so;
    so.replicates = kR;
    so.seed = s;
    const auto a = spt_ci(t, 0.95, so);
    CptOptions co;
    co.replicates = kR;
    co.seed = s;
    const auto b = cpt_ci(t, 0.95, co);
    if (!a.interval || !b.interval) return {false, "empty interval at seed " + std::to_string(s)};
    spt.lo += a.interval->lo / kSeeds;
    spt.hi += a.interval->hi / kSeeds;
    cpt.lo += b.interval->lo / kSeeds;
    cpt.hi += b.interval->hi / kSeeds;
  }
  check("spt", spt, {0.06, 0.38}, kPermTol);
  check("cpt", cpt, {0.02, 0.40}, kPermTol);
  check("ws", ws_interval(t, 0.95), {0.04, 0.39}, kWsTol);
  check("esi", esi_interval(t, 0.95), {-0.01, 0.41}, kEsiTol);
  const double secs = seconds_since(start);
  pass = pass && secs < kBudgetSeconds;
  os << fmt(" runtime=%.1fs", secs, 0);
  return {pass, os.str()};
}

// 2. Widths and coverage on the first built-in scenario.
Outcome criterion_2() {
  constexpr double kWidthTol = 0.04;
  constexpr double kCoverage = 0.92;
  constexpr double kBudgetSeconds = 1200.0;
  const std::map<Method, double> target{{Method::Wald, 0.51}, {Method::ESI, 0.67},
                                       {Method::WS, 0.57},   {Method::CPT, 0.57},
                                       {Method::SPT, 0.50}};
  const auto start = Clock::now();
  auto s = table1_scenarios().front();
  s.reps = 100;
  s.replicates = 100;
  s.seed = 1;
  const auto r = run_scenario(s);
  std::ostringstream os;
  bool pass = true;
  for (const auto& m : r.summaries) {
    const bool width_ok = m.completed == m.attempted &&
                          std::abs(m.mean_width - target.at(m.method)) <= kWidthTol;
    const bool cover_ok = m.method == Method::Wald || m.coverage >= kCoverage;
    pass = pass && width_ok && cover_ok;
    os << ' ' << to_string(m.method) << fmt(" width=%.3f cover=%.2f", m.mean_width, m.coverage)
       << (width_ok && cover_ok ? "" : "(miss)");
  }
  const double secs = seconds_since(start);
  pass = pass && secs < kBudgetSeconds;
  os << fmt(" runtime=%.1fs", secs, 0);
  return {pass, os.str()};
}

// 3. Wald undercoverage on the fifth built-in scenario.
Outcome criterion_3() {
  constexpr double kMaxCoverage = 0.75;
  auto s = table1_scenarios().at(4);
  s.reps = 100;
  s.seed = 1;
  s.methods = {Method::Wald};
  const auto r = run_scenario(s);
  const double cover = r.summary(Method::Wald).coverage;
  return {cover <= kMaxCoverage, fmt("wald coverage=%.2f (max %.2f)", cover, kMaxCoverage)};
}

// 4. Exhaustive SPT against the naive implementation.
Outcome criterion_4() {
  constexpr int kTables = 20;
  constexpr double kBudgetSeconds = 60.0;
  const auto start = Clock::now();
  Stream rng(stream_key(4, 0));
  int equal = 0;
  for (int i = 0; i < kTables; ++i) {
    const auto obs = random_table(rng, {{4, 2}, {4, 2}});
    const auto alloc = exhaustive_allocations(obs.design());
    const auto res = spt_ci(obs, 0.95, alloc, SptOptions{});
    const std::set<std::int64_t> got(res.accepted.begin(), res.accepted.end());
    equal += got == oracle::naive_exact_spt(obs, 1.0 - 0.95);
  }
  const double secs = seconds_since(start);
  return {equal == kTables && secs < kBudgetSeconds,
          std::to_string(equal) + "/" + std::to_string(kTables) +
              fmt(" identical accepted sets, runtime=%.1fs", secs, 0)};
}

// 5. Reduced path equals full enumeration and tests fewer tables.
Outcome criterion_5() {
  constexpr int kTables = 20;
  constexpr double kMinRatio = 2.0;
  Stream rng(stream_key(5, 0));
  int equal = 0;
  std::array<double, 2> worst{INFINITY, INFINITY};  // memo on, memo off
  std::array<double, 2> full_sum{0.0, 0.0};
  std::array<double, 2> reduced_sum{0.0, 0.0};
  for (int i = 0; i < kTables; ++i) {
    const auto obs = random_table(rng, {{6, 3}, {6, 3}});
    const auto alloc = generate_allocations(obs.design(), 200, i);
    bool same = true;
    for (int memo = 0; memo < 2; ++memo) {
      SptOptions full;
      full.reduced = false;
      full.memo = memo == 0;
      SptOptions reduced;
      reduced.memo = memo == 0;
      const auto a = spt_ci(obs, 0.95, alloc, full);
      const auto b = spt_ci(obs, 0.95, alloc, reduced);
      same = same && a.accepted == b.accepted;
      worst[memo] = std::min(worst[memo], static_cast<double>(a.tables_tested) / b.tables_tested);
      full_sum[memo] += a.tables_tested;
      reduced_sum[memo] += b.tables_tested;
    }
    equal += same;
  }
  const bool ratio_ok = worst[0] >= kMinRatio || worst[1] >= kMinRatio;
  return {equal == kTables && ratio_ok,
          std::to_string(equal) + "/" + std::to_string(kTables) + " identical accepted sets;" +
              fmt(" full/reduced tables_tested memo on: min %.2f total %.2f;", worst[0],
                  full_sum[0] / reduced_sum[0]) +
              fmt(" memo off: min %.2f total %.2f (need >= 2)", worst[1],
                  full_sum[1] / reduced_sum[1])};
}

// 6. p-values are identical within an equivalence class on balanced strata.
Outcome criterion_6() {
  constexpr int kPairs = 100;
  Stream rng(stream_key(6, 0));
  int tested = 0;
  int identical = 0;
  while (tested < kPairs) {
    const auto obs = random_table(rng, {{6, 3}, {8, 4}, {5, 2}});
    const auto alloc = generate_allocations(obs.design(), 300, tested);
    std::vector<std::vector<StratumPotential>> per;
    for (int k = 0; k < 3; ++k) per.push_back(enumerate_stratum_tables(obs, k));
    // Draw a table, then move effect between the two balanced strata.
    const auto& s0 = per[0][rng.below(per[0].size())];
    const auto& s2 = per[2][rng.below(per[2].size())];
    std::vector<StratumPotential> partners;
    const auto& s1 = per[1][rng.below(per[1].size())];
    for (const auto& a : per[0]) {
      if (a.v11 != s0.v11 || a.v00 != s0.v00 || a == s0) continue;
      for (const auto& b : per[1]) {
        if (b.v11 != s1.v11 || b.v00 != s1.v00) continue;
        if (a.effect() + b.effect() != s0.effect() + s1.effect()) continue;
        partners.push_back(a);
        partners.push_back(b);
      }
    }
    if (partners.empty()) continue;
    const std::size_t pick = 2 * rng.below(partners.size() / 2);
    const PotentialTable v({s0, s1, s2});
    const PotentialTable w({partners[pick], partners[pick + 1], s2});
    const auto p = mc_pvalue(v, obs, alloc);
    const auto q = mc_pvalue(w, obs, alloc);
    identical += p.extreme == q.extreme && p.replicates == q.replicates &&
                 p.value() == q.value();
    ++tested;
  }
  return {identical == kPairs,
          std::to_string(identical) + "/" + std::to_string(kPairs) + " class pairs bit-identical"};
}

// 7. Closed-form tau_hat and compatibility against oracles.
Outcome criterion_7() {
  constexpr int kDraws = 10000;
  Stream rng(stream_key(7, 0));
  int exact = 0;
  for (int i = 0; i < kDraws; ++i) {
    const int K = 1 + static_cast<int>(rng.below(4));
    std::vector<StratumPotential> strata;
    std::vector<int> m;
    for (int k = 0; k < K; ++k) {
      const int n = 2 + static_cast<int>(rng.below(14));
      std::array<int, 4> c{0, 0, 0, 0};
      for (int j = 0; j < n; ++j) ++c[rng.below(4)];
      strata.push_back({c[0], c[1], c[2], c[3]});
      m.push_back(1 + static_cast<int>(rng.below(n - 1)));
    }
    const PotentialTable v(strata);
    std::vector<StratumSize> sizes;
    for (int k = 0; k < K; ++k) sizes.push_back({strata[k].total(), m[k]});
    const Design design(sizes);
    const auto x = sample_assignment(v, m, stream_key(7, i));
    const auto induced = induced_outcome(v, x);
    const StatScale scale(design);
    const std::vector<StratumOutcome> counts(induced.counts().begin(), induced.counts().end());
    const auto want = oracle::tau_hat(counts) * oracle::Rational(scale.D() * design.n());
    exact += want.den == 1 && want.num == scaled_tau_hat(scale, v, x);
  }

  // Every stratum design with n <= 5, every observed pair, every table pair.
  struct Cell {
    StratumOutcome obs;
    std::vector<std::pair<StratumPotential, bool>> tables;
  };
  std::vector<Cell> cells;
  for (int n = 2; n <= 5; ++n) {
    for (int mm = 1; mm < n; ++mm) {
      for (int a = 0; a <= mm; ++a) {
        for (int b = 0; b <= n - mm; ++b) {
          Cell c{{a, mm - a, b, n - mm - b}, {}};
          for (const auto& v : oracle::all_stratum_tables(n)) {
            c.tables.emplace_back(v, oracle::compatible_by_search(v, c.obs));
          }
          cells.push_back(std::move(c));
        }
      }
    }
  }
  std::int64_t checked = 0;
  std::int64_t agree = 0;
  for (const auto& c0 : cells) {
    for (const auto& c1 : cells) {
      const OutcomeTable obs({c0.obs, c1.obs});
      for (const auto& [v0, ok0] : c0.tables) {
        for (const auto& [v1, ok1] : c1.tables) {
          ++checked;
          agree += is_compatible(PotentialTable({v0, v1}), obs) == (ok0 && ok1);
        }
      }
    }
  }
  return {exact == kDraws && agree == checked,
          std::to_string(exact) + "/" + std::to_string(kDraws) + " exact tau_hat identities, " +
              std::to_string(agree) + "/" + std::to_string(checked) + " compatibility verdicts"};
}

// 8. Tippett shortcut equals the tuple search on every first-grid scenario.
Outcome criterion_8() {
  const auto scenarios = table1_scenarios();
  int equal = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& s = scenarios[i];
    const auto obs = induced_outcome(s.v, sample_assignment(s.v, s.m, rep_data_key(8, static_cast<int>(i))));
    const auto alloc = generate_allocations(obs.design(), 100, 8);
    CptOptions opt;
    opt.combiner = Combiner::Tippett;
    const auto full = cpt_ci(obs, 0.95, alloc, opt);
    const auto shortcut = cpt_tippett_shortcut(obs, 0.95, alloc);
    const bool same = full.interval.has_value() == shortcut.has_value() &&
                      (!shortcut || (full.interval->lo == shortcut->lo &&
                                     full.interval->hi == shortcut->hi));
    equal += same;
  }
  return {equal == static_cast<int>(scenarios.size()),
          std::to_string(equal) + "/" + std::to_string(scenarios.size()) +
              " scenarios with identical endpoints"};
}

// 9. Exhaustive coverage of the hypergeometric parameter interval.
Outcome criterion_9() {
  constexpr int kMaxN = 30;
  const std::vector<double> levels{0.8, 0.9, 0.95, 0.99};
  double worst_gap = INFINITY;
  std::int64_t cases = 0;
  for (double level : levels) {
    for (int N = 1; N <= kMaxN; ++N) {
      for (int d = 0; d <= N; ++d) {
        std::vector<IntRange> ci;
        for (int x = 0; x <= d; ++x) ci.push_back(hypergeom_param_ci(x, N, d, level));
        for (int G = 0; G <= N; ++G) {
          double cover = 0.0;
          for (int x = std::max(0, d - (N - G)); x <= std::min(d, G); ++x) {
            if (ci[x].lo <= G && G <= ci[x].hi) {
              double p = 1.0;
              // C(G, x) C(N - G, d - x) / C(N, d) by products.
              for (int i = 1; i <= x; ++i) p = p * (G - x + i) / i;
              for (int i = 1; i <= d - x; ++i) p = p * (N - G - (d - x) + i) / i;
              for (int i = 1; i <= d; ++i) p = p * i / (N - d + i);
              cover += p;
            }
          }
          worst_gap = std::min(worst_gap, cover - level);
          ++cases;
        }
      }
    }
  }
  return {worst_gap >= -1e-12,
          std::to_string(cases) + fmt(" (level, N, d, G) cases, min coverage - level = %.4g", worst_gap, 0)};
}

// 10. Byte-identical CLI output at 1 and 8 threads.
Outcome criterion_10() {
  const char* path = "acceptance_vedolizumab.csv";
  {
    std::FILE* f = std::fopen(path, "w");
    if (f == nullptr) return {false, "cannot write input file"};
    std::fputs("label,treated_responders,treated_total,control_responders,control_total\n"
               "naive,8,29,3,25\nfailure,8,22,2,26\n",
               f);
    std::fclose(f);
  }
  auto run = [&](const std::string& method, const std::string& threads, const std::string& stat) {
    std::vector<std::string> args{"stratexact", "analyze", "--input", path, "--method", method,
                                  "--seed", "7", "--reps", "500", "--stat", stat, "--no-timing",
                                  "--threads", threads};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::to_string(code) + out.str();
  };
  int same = 0;
  int total = 0;
  for (const std::string method : {"wald", "ws", "esi", "spt", "cpt", "all"}) {
    for (const std::string stat : {"absdiff", "studentized"}) {
      ++total;
      same += run(method, "1", stat) == run(method, "8", stat);
    }
  }
  std::remove(path);
  return {same == total, std::to_string(same) + "/" + std::to_string(total) +
                             " method/statistic outputs byte-identical"};
}

// 11. Combiner rejection rates under independent uniform p-values.
Outcome criterion_11() {
  constexpr int kSims = 100000;
  constexpr double kAlpha = 0.05;
  constexpr double kMaxRate = 0.053;
  std::ostringstream os;
  bool pass = true;
  for (int K : {2, 5}) {
    for (auto c : {Combiner::Fisher, Combiner::Tippett, Combiner::Pearson, Combiner::George,
                   Combiner::Stouffer}) {
      Stream rng(stream_key(11, K, static_cast<int>(c)));
      int rejects = 0;
      std::vector<double> p(K);
      for (int s = 0; s < kSims; ++s) {
        for (auto& x : p) x = 1.0 - rng.uniform();
        rejects += combine_pvalues(c, p, kAlpha).reject;
      }
      const double rate = static_cast<double>(rejects) / kSims;
      pass = pass && rate <= kMaxRate;
      os << ' ' << to_string(c) << "(K=" << K << ")=" << fmt("%.4f", rate, 0);
    }
  }
  return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5, criterion_6,
      criterion_7, criterion_8, criterion_9, criterion_10, criterion_11};
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "usage: %s [criterion 1..%zu]\n", argv[0], criteria.size());
    return 2;
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i + 1)) continue;
    const auto r = criteria[i]();
    std::printf("criterion %zu: %s %s\n", i + 1, r.pass ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
    failed += !r.pass;
  }
  return failed == 0 ? 0 : 1;
}
