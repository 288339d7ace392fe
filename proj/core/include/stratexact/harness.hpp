#pragma once

// Simulation experiments: coverage, width and runtime of each method over
// repeated random assignments from a fixed potential-outcome table.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratexact/methods.hpp"
#include "stratexact/model.hpp"

namespace stratexact {

inline const std::vector<Method> kAllMethods{Method::Wald, Method::ESI, Method::WS, Method::CPT,
                                             Method::SPT};

struct Scenario {
  std::string name;
  PotentialTable v;
  std::vector<int> m;  // treated subjects per stratum
  int reps = 100;
  int replicates = 100;  // allocations per permutation test
  double level = 0.95;
  std::vector<Method> methods = kAllMethods;
  std::uint64_t seed = 0;
  StatisticKind stat = StatisticKind::AbsDiff;
  Combiner combiner = Combiner::Fisher;
  std::int64_t budget = kDefaultBudget;
  double ws_cap = kDefaultWsCap;
  int threads = 0;  // parallel reps; 0 uses every core

  /// Throws ValidationError when v and m disagree or reps < 1.
  void validate() const;
  Design design() const;
};

struct RepRecord {
  int rep = 0;
  Method method = Method::SPT;
  bool completed = false;  // false when the method exceeded its budget
  std::optional<Interval> interval;
  double width = 0.0;
  bool covered = false;
  double runtime_ms = 0.0;
  std::int64_t tables_tested = 0;
  std::string note;
};

struct MethodSummary {
  Method method = Method::SPT;
  int attempted = 0;
  int completed = 0;
  double mean_width = 0.0;  // over completed reps
  double coverage = 0.0;
  double mean_runtime_ms = 0.0;
};

struct ScenarioResult {
  std::string name;
  double tau = 0.0;
  std::vector<MethodSummary> summaries;  // in Scenario::methods order
  std::vector<RepRecord> records;        // rep-major, then method order

  const MethodSummary& summary(Method m) const;
};

/// Draws type counts for m_k treated subjects from each stratum of v
/// (multivariate hypergeometric, sequential draws).
TypeCounts sample_assignment(const PotentialTable& v, const std::vector<int>& m, std::uint64_t key);

/// Seed of the data draw and of the method calls in one rep.
std::uint64_t rep_data_key(std::uint64_t seed, int rep);
std::uint64_t rep_method_seed(std::uint64_t seed, int rep);

ScenarioResult run_scenario(const Scenario& s);

/// Potential table of one balanced-sweep stratum: |tau| n subjects of the
/// forced type, the rest with Bernoulli(1/2) treated responses and control
/// responses permuted from them.
StratumPotential balanced_sweep_stratum(int n, int effect, std::uint64_t key);

struct SweepRecord {
  int n = 0;  // total subjects
  std::vector<double> taus;
  Method method = Method::SPT;
  double mean_width = 0.0;
  int completed = 0;
};

struct SweepConfig {
  std::vector<int> n_list;                 // subjects per stratum, each even
  std::vector<std::vector<double>> tau_pairs;  // per-stratum effects, one tuple per setting
  int reps = 100;
  int replicates = 100;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::vector<Method> methods = kAllMethods;
  std::int64_t budget = kDefaultBudget;
  double ws_cap = kDefaultWsCap;
  int threads = 0;
};

std::vector<SweepRecord> run_balanced_sweep(const SweepConfig& config);

struct CaseStudyRow {
  Method method = Method::SPT;
  std::optional<Interval> interval;
  Interval published;
  std::string note;
};

struct CaseStudyReport {
  OutcomeTable table;
  double tau_hat = 0.0;
  std::vector<CaseStudyRow> rows;
  Interval cmh_reference;  // displayed only, not computed
};

/// Vedolizumab trial: two strata, treated 8/29 and 8/22 responders, control
/// 3/25 and 2/26.
OutcomeTable case_study_table();
CaseStudyReport case_study(int replicates = 1000, std::uint64_t seed = 1, int threads = 0);

/// Built-in scenarios matching the published simulation grid, 12 rows with
/// two or three strata and 5 rows with three to five strata.
std::vector<Scenario> table1_scenarios();
std::vector<Scenario> table2_scenarios();

}  // namespace stratexact
