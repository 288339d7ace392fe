#pragma once

// Confidence procedures for the ATE: Wald, the stratified permutation test
// (SPT), combined stratumwise permutation tests (CPT), and wrappers for
// missing outcomes and relative risk.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratexact/bounds.hpp"
#include "stratexact/model.hpp"
#include "stratexact/randomization.hpp"

namespace stratexact {

inline constexpr std::int64_t kDefaultBudget = 100'000'000;

struct StratumWald {
  double mean_treated = 0.0;
  double mean_control = 0.0;
  double var_treated = 0.0;  // unbiased sample variance
  double var_control = 0.0;
};

struct WaldComponents {
  std::vector<StratumWald> strata;
  double tau_hat = 0.0;
  double variance = 0.0;
};

struct WaldResult {
  Interval interval;
  WaldComponents components;
  bool clipped = false;
};

WaldComponents wald_components(const OutcomeTable& obs);
WaldResult wald_ci(const OutcomeTable& obs, double level);

enum class Combiner { Fisher, Tippett, Pearson, George, Stouffer };

const char* to_string(Combiner c);

struct ConfidenceResult {
  std::string method;
  std::optional<Interval> interval;    // nullopt for an empty confidence set
  std::vector<std::int64_t> accepted;  // accepted effect numerators over n
  int n = 0;
  double level = 0.95;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::optional<StatisticKind> statistic;
  std::optional<Combiner> combiner;
  std::int64_t tables_tested = 0;
  double runtime_ms = 0.0;
  std::vector<std::string> warnings;
  std::optional<PotentialTable> lo_witness;
  std::optional<PotentialTable> hi_witness;
  std::optional<Interval> rr_interval;
};

struct SptOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  StatisticKind stat = StatisticKind::AbsDiff;
  bool reduced = true;  // use class representatives for balanced strata
  bool memo = true;     // skip tables whose effect is already accepted
  bool track_rr = false;
  std::int64_t budget = kDefaultBudget;
  int threads = 1;
};

/// Draws options.replicates allocations from options.seed and inverts the
/// permutation test over every compatible table.
ConfidenceResult spt_ci(const OutcomeTable& obs, double level, const SptOptions& options);
/// Same sweep with caller-supplied allocations.
ConfidenceResult spt_ci(const OutcomeTable& obs, double level, const AllocationSet& alloc,
                        const SptOptions& options);

/// RR interval from the SPT sweep: the extremes of v1./v.1 over accepted
/// tables. The result's interval holds the RR interval.
ConfidenceResult rr_spt_ci(const OutcomeTable& obs, double level, const SptOptions& options);

/// Stratum-level p-value maximized over the stratum tables with each effect
/// numerator d; effects without a compatible table are absent.
struct StratumPValueProfile {
  int stratum = 0;
  std::map<int, PValue> pvalues;
};

StratumPValueProfile cpt_stratum_profile(const OutcomeTable& obs, int k,
                                         const AllocationSet& alloc,
                                         StatisticKind stat = StatisticKind::AbsDiff,
                                         int threads = 1);

struct CombinedTest {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
  bool clamped = false;  // some p = 1 was pulled below 1
};

/// Decision at level alpha for K = p.size() independent p-values. A p-value
/// of 1 is replaced by 1 - 1 / (2 (R + 1)) for the combiners that need it.
CombinedTest combine_pvalues(Combiner c, std::span<const PValue> p, double alpha);
/// Same rule on plain probabilities; `clamp_replicates` sets R for the clamp.
CombinedTest combine_pvalues(Combiner c, std::span<const double> p, double alpha,
                             std::int64_t clamp_replicates = 0);

/// Largest minimum p-value Tippett's rule rejects: 1 - (1 - alpha)^(1/K).
double tippett_cutoff(double alpha, int K);

struct CptOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  StatisticKind stat = StatisticKind::AbsDiff;
  Combiner combiner = Combiner::Fisher;
  std::int64_t budget = kDefaultBudget;
  int threads = 1;
};

/// One allocation set is shared by all strata.
ConfidenceResult cpt_ci(const OutcomeTable& obs, double level, const CptOptions& options);
ConfidenceResult cpt_ci(const OutcomeTable& obs, double level, const AllocationSet& alloc,
                        const CptOptions& options);

/// Tippett interval from per-stratum test inversion: keep d_k with
/// p(d_k) > 1 - level^(1/K), then sum the per-stratum extremes.
std::optional<Interval> cpt_tippett_shortcut(const OutcomeTable& obs, double level,
                                             const AllocationSet& alloc,
                                             StatisticKind stat = StatisticKind::AbsDiff);
std::optional<Interval> cpt_tippett_shortcut(const OutcomeTable& obs, double level,
                                             int replicates, std::uint64_t seed);

/// Observed counts of one stratum plus subjects whose outcome is missing in
/// each arm.
struct StratumWithMissing {
  StratumOutcome observed;
  int treated_missing = 0;
  int control_missing = 0;
};

/// Fills missing outcomes. favor_treatment sets missing treated outcomes to 1
/// and missing control outcomes to 0; otherwise the reverse.
OutcomeTable complete_missing(const std::vector<StratumWithMissing>& strata, bool favor_treatment);

/// Envelope of `method` on the two extreme completions.
std::optional<Interval> missing_data_wrap(
    const std::vector<StratumWithMissing>& strata,
    const std::function<std::optional<Interval>(const OutcomeTable&)>& method);

enum class Method { Wald, WS, ESI, SPT, CPT };
enum class Target { ATE, RR };

const char* to_string(Method m);

struct MethodRequest {
  Method method = Method::SPT;
  Target target = Target::ATE;
  double level = 0.95;
  int replicates = 1000;
  std::uint64_t seed = 0;
  StatisticKind stat = StatisticKind::AbsDiff;
  Combiner combiner = Combiner::Fisher;
  std::int64_t budget = kDefaultBudget;
  double ws_cap = kDefaultWsCap;
  int threads = 1;
};

/// Runs one method and reports it uniformly. RR targets are available for
/// W-S, ESI and SPT.
ConfidenceResult run_method(const OutcomeTable& obs, const MethodRequest& request);
/// With missing outcomes: the envelope over the two extreme completions.
ConfidenceResult run_method(const std::vector<StratumWithMissing>& strata,
                            const MethodRequest& request);

}  // namespace stratexact
