#include "stratexact/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "stratexact/errors.hpp"
#include "stratexact/rng.hpp"

namespace stratexact {
namespace {

constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kMethodStream = 0x5eed;
constexpr std::uint64_t kSweepStream = 0x5ee9;

int thread_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

PotentialTable make_table(std::initializer_list<std::array<int, 4>> strata) {
  std::vector<StratumPotential> out;
  for (const auto& s : strata) out.push_back({s[0], s[1], s[2], s[3]});
  return PotentialTable(std::move(out));
}

Scenario make_scenario(std::string name, std::initializer_list<std::array<int, 4>> v,
                       std::vector<int> m) {
  Scenario s;
  s.name = std::move(name);
  s.v = make_table(v);
  s.m = std::move(m);
  return s;
}

RepRecord run_one(const OutcomeTable& obs, double tau, Method method, const MethodRequest& base) {
  RepRecord rec;
  rec.method = method;
  MethodRequest req = base;
  req.method = method;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto res = run_method(obs, req);
    rec.completed = true;
    rec.interval = res.interval;
    rec.tables_tested = res.tables_tested;
    if (res.interval) {
      rec.width = res.interval->width();
      rec.covered = res.interval->contains(tau);
    }
  } catch (const IntractableError& e) {
    rec.note = std::string("did not complete: ") + e.what();
  }
  rec.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

void Scenario::validate() const {
  if (reps < 1) throw ValidationError("scenario needs reps >= 1");
  if (replicates < 1) throw ValidationError("scenario needs at least one allocation");
  if (static_cast<int>(m.size()) != v.strata()) {
    throw ValidationError("scenario has " + std::to_string(v.strata()) + " strata but " +
                          std::to_string(m.size()) + " treated sizes");
  }
  if (methods.empty()) throw ValidationError("scenario lists no methods");
  v.check_against(design());
}

Design Scenario::design() const {
  std::vector<StratumSize> sizes;
  for (int k = 0; k < v.strata(); ++k) sizes.push_back({v[k].total(), m[k]});
  return Design(std::move(sizes));
}

const MethodSummary& ScenarioResult::summary(Method m) const {
  for (const auto& s : summaries) {
    if (s.method == m) return s;
  }
  throw ValidationError(std::string("no summary for method ") + to_string(m));
}

TypeCounts sample_assignment(const PotentialTable& v, const std::vector<int>& m, std::uint64_t key) {
  TypeCounts out;
  out.x.resize(v.strata());
  for (int k = 0; k < v.strata(); ++k) {
    Stream rng(stream_key(key, static_cast<std::uint64_t>(k)));
    std::array<int, 4> left{v[k].v11, v[k].v10, v[k].v01, v[k].v00};
    int remaining = v[k].total();
    auto& x = out.x[k];
    x = {0, 0, 0, 0};
    for (int draw = 0; draw < m[k]; ++draw) {
      auto u = static_cast<int>(rng.below(static_cast<std::uint64_t>(remaining)));
      int type = 0;
      while (u >= left[type]) u -= left[type++];
      --left[type];
      ++x[type];
      --remaining;
    }
  }
  return out;
}

std::uint64_t rep_data_key(std::uint64_t seed, int rep) {
  return stream_key(seed, kDataStream, static_cast<std::uint64_t>(rep));
}

std::uint64_t rep_method_seed(std::uint64_t seed, int rep) {
  return stream_key(seed, kMethodStream, static_cast<std::uint64_t>(rep));
}

ScenarioResult run_scenario(const Scenario& s) {
  s.validate();
  ScenarioResult out;
  out.name = s.name;
  out.tau = tau(s.v).value();
  const int M = static_cast<int>(s.methods.size());
  out.records.resize(static_cast<std::size_t>(s.reps) * M);

  MethodRequest base;
  base.level = s.level;
  base.replicates = s.replicates;
  base.stat = s.stat;
  base.combiner = s.combiner;
  base.budget = s.budget;
  base.ws_cap = s.ws_cap;
  base.threads = 1;

#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(s.threads))
  for (int rep = 0; rep < s.reps; ++rep) {
    const auto x = sample_assignment(s.v, s.m, rep_data_key(s.seed, rep));
    const auto obs = induced_outcome(s.v, x);
    MethodRequest req = base;
    req.seed = rep_method_seed(s.seed, rep);
    for (int j = 0; j < M; ++j) {
      auto rec = run_one(obs, out.tau, s.methods[j], req);
      rec.rep = rep;
      out.records[static_cast<std::size_t>(rep) * M + j] = std::move(rec);
    }
  }

  for (int j = 0; j < M; ++j) {
    MethodSummary sum;
    sum.method = s.methods[j];
    int covered = 0;
    double width = 0.0;
    double runtime = 0.0;
    for (int rep = 0; rep < s.reps; ++rep) {
      const auto& rec = out.records[static_cast<std::size_t>(rep) * M + j];
      ++sum.attempted;
      if (!rec.completed) continue;
      ++sum.completed;
      covered += rec.covered ? 1 : 0;
      width += rec.width;
      runtime += rec.runtime_ms;
    }
    if (sum.completed > 0) {
      sum.mean_width = width / sum.completed;
      sum.coverage = static_cast<double>(covered) / sum.completed;
      sum.mean_runtime_ms = runtime / sum.completed;
    }
    out.summaries.push_back(sum);
  }
  return out;
}

StratumPotential balanced_sweep_stratum(int n, int effect, std::uint64_t key) {
  if (n < 2 || n % 2 != 0) throw ValidationError("balanced sweep needs even stratum sizes >= 2");
  if (std::abs(effect) > n) throw ValidationError("stratum effect exceeds the stratum size");
  Stream rng(key);
  const int forced = std::abs(effect);
  const int free = n - forced;
  std::vector<int> treated(free);
  for (auto& y : treated) y = static_cast<int>(rng.below(2));
  std::vector<int> control = treated;
  for (int i = free - 1; i > 0; --i) {
    std::swap(control[i], control[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  StratumPotential s;
  if (effect >= 0) {
    s.v10 = forced;
  } else {
    s.v01 = forced;
  }
  for (int i = 0; i < free; ++i) {
    if (treated[i] == 1 && control[i] == 1) ++s.v11;
    if (treated[i] == 1 && control[i] == 0) ++s.v10;
    if (treated[i] == 0 && control[i] == 1) ++s.v01;
    if (treated[i] == 0 && control[i] == 0) ++s.v00;
  }
  return s;
}

std::vector<SweepRecord> run_balanced_sweep(const SweepConfig& c) {
  if (c.n_list.empty() || c.tau_pairs.empty()) {
    throw ValidationError("sweep needs at least one n and one tau tuple");
  }
  if (c.reps < 1) throw ValidationError("sweep needs reps >= 1");
  std::vector<SweepRecord> out;
  for (std::size_t ti = 0; ti < c.tau_pairs.size(); ++ti) {
    const auto& taus = c.tau_pairs[ti];
    const int K = static_cast<int>(taus.size());
    if (K == 0) throw ValidationError("empty tau tuple in sweep");
    for (int n : c.n_list) {
      std::vector<int> effects(K);
      for (int k = 0; k < K; ++k) {
        const double e = taus[k] * n;
        if (std::abs(e - std::round(e)) > 1e-9 || std::abs(taus[k]) > 1.0) {
          throw ValidationError("tau " + std::to_string(taus[k]) + " times n = " +
                                std::to_string(n) + " is not an integer in [-n, n]");
        }
        effects[k] = static_cast<int>(std::lround(e));
      }
      if (n < 2 || n % 2 != 0) throw ValidationError("balanced sweep needs even stratum sizes");
      const int M = static_cast<int>(c.methods.size());
      std::vector<RepRecord> records(static_cast<std::size_t>(c.reps) * M);
      const std::uint64_t setting_seed = stream_key(c.seed, ti, static_cast<std::uint64_t>(n));

      MethodRequest base;
      base.level = c.level;
      base.replicates = c.replicates;
      base.budget = c.budget;
      base.ws_cap = c.ws_cap;
      base.threads = 1;

#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(c.threads))
      for (int rep = 0; rep < c.reps; ++rep) {
        std::vector<StratumPotential> strata;
        for (int k = 0; k < K; ++k) {
          strata.push_back(balanced_sweep_stratum(
              n, effects[k], stream_key(setting_seed, kSweepStream ^ rep, static_cast<std::uint64_t>(k))));
        }
        const PotentialTable v(std::move(strata));
        const std::vector<int> m(K, n / 2);
        const double t = tau(v).value();
        const auto obs = induced_outcome(v, sample_assignment(v, m, rep_data_key(setting_seed, rep)));
        MethodRequest req = base;
        req.seed = rep_method_seed(setting_seed, rep);
        for (int j = 0; j < M; ++j) {
          records[static_cast<std::size_t>(rep) * M + j] = run_one(obs, t, c.methods[j], req);
        }
      }
      for (int j = 0; j < M; ++j) {
        SweepRecord rec;
        rec.n = n * K;
        rec.taus = taus;
        rec.method = c.methods[j];
        double width = 0.0;
        for (int rep = 0; rep < c.reps; ++rep) {
          const auto& r = records[static_cast<std::size_t>(rep) * M + j];
          if (!r.completed) continue;
          ++rec.completed;
          width += r.width;
        }
        if (rec.completed > 0) rec.mean_width = width / rec.completed;
        out.push_back(rec);
      }
    }
  }
  return out;
}

OutcomeTable case_study_table() {
  return OutcomeTable({{8, 21, 3, 22}, {8, 14, 2, 24}});
}

CaseStudyReport case_study(int replicates, std::uint64_t seed, int threads) {
  CaseStudyReport out;
  out.table = case_study_table();
  out.tau_hat = tau_hat(out.table);
  out.cmh_reference = {0.05, 0.38};
  const std::vector<std::pair<Method, Interval>> published{
      {Method::WS, {0.04, 0.39}}, {Method::ESI, {-0.01, 0.41}}, {Method::SPT, {0.06, 0.38}},
      {Method::CPT, {0.02, 0.40}}, {Method::Wald, {0.06, 0.38}}};
  MethodRequest req;
  req.replicates = replicates;
  req.seed = seed;
  req.threads = thread_count(threads);
  for (const auto& [method, ref] : published) {
    CaseStudyRow row;
    row.method = method;
    row.published = ref;
    req.method = method;
    try {
      row.interval = run_method(out.table, req).interval;
    } catch (const IntractableError& e) {
      row.note = std::string("did not complete: ") + e.what();
    }
    out.rows.push_back(row);
  }
  return out;
}

std::vector<Scenario> table1_scenarios() {
  return {
      make_scenario("t1-r1", {{10, 10, 10, 10}, {10, 10, 10, 10}}, {10, 10}),
      make_scenario("t1-r2", {{3, 8, 4, 5}, {0, 19, 1, 0}}, {15, 15}),
      make_scenario("t1-r3", {{3, 23, 2, 2}, {4, 2, 30, 4}}, {5, 30}),
      make_scenario("t1-r4", {{2, 24, 0, 4}, {1, 26, 2, 1}}, {5, 25}),
      make_scenario("t1-r5", {{1, 0, 9, 0}, {0, 40, 0, 0}}, {5, 20}),
      make_scenario("t1-r6", {{5, 5, 5, 5}, {20, 50, 2, 8}}, {15, 60}),
      make_scenario("t1-r7", {{2, 12, 0, 1}, {2, 55, 1, 2}}, {10, 40}),
      make_scenario("t1-r8", {{2, 2, 12, 4}, {3, 64, 1, 2}}, {5, 60}),
      make_scenario("t1-r9", {{0, 16, 0, 4}, {3, 9, 1, 7}, {5, 5, 5, 5}}, {5, 10, 15}),
      make_scenario("t1-r10", {{1, 13, 1, 0}, {0, 18, 0, 2}, {0, 20, 0, 5}}, {10, 10, 10}),
      make_scenario("t1-r11", {{0, 19, 1, 0}, {3, 4, 4, 4}, {0, 2, 18, 0}}, {5, 5, 5}),
      make_scenario("t1-r12", {{5, 0, 0, 5}, {6, 0, 0, 14}, {18, 1, 1, 10}}, {5, 5, 25}),
  };
}

std::vector<Scenario> table2_scenarios() {
  return {
      make_scenario("t2-r1", {{8, 15, 0, 7}, {9, 21, 1, 9}, {12, 26, 1, 11}}, {10, 10, 10}),
      make_scenario("t2-r2", {{10, 20, 0, 10}, {7, 1, 25, 7}, {12, 8, 8, 12}}, {20, 30, 10}),
      make_scenario("t2-r3", {{5, 0, 0, 45}, {10, 0, 0, 40}, {10, 0, 0, 40}, {5, 0, 0, 75}},
                    {25, 25, 25, 40}),
      make_scenario("t2-r4",
                    {{15, 8, 0, 7}, {9, 1, 21, 9}, {7, 6, 21, 6}, {3, 12, 3, 3}, {5, 20, 1, 1}},
                    {10, 10, 10, 10, 10}),
      make_scenario("t2-r5",
                    {{1, 0, 0, 39}, {10, 0, 0, 40}, {10, 0, 0, 10}, {3, 0, 0, 7}, {25, 0, 0, 25}},
                    {20, 30, 10, 5, 20}),
  };
}

}  // namespace stratexact
