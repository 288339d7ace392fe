#include "stratexact/methods.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "detail.hpp"
#include "spt_engine.hpp"
#include "stratexact/dist.hpp"
#include "stratexact/enumeration.hpp"
#include "stratexact/errors.hpp"

namespace stratexact {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("confidence level must lie in (0, 1), got " + std::to_string(level));
  }
}

std::optional<Interval> hull(const std::vector<std::int64_t>& accepted, int n) {
  if (accepted.empty()) return std::nullopt;
  return Interval{static_cast<double>(accepted.front()) / n,
                  static_cast<double>(accepted.back()) / n};
}

double ratio_value(const detail::Ratio& r) {
  if (r.den == 0) return kInfinity;
  return static_cast<double>(r.num) / static_cast<double>(r.den);
}

std::optional<Interval> rr_hull(const std::vector<detail::Ratio>& accepted) {
  if (accepted.empty()) return std::nullopt;
  if (accepted.back().num == 0 && accepted.back().den == 0) return Interval{0.0, kInfinity};
  return Interval{ratio_value(accepted.front()), ratio_value(accepted.back())};
}

const char* kSterneWarning =
    "sterne: acceptance regions are not nested in the hypothesized effect; coverage is not "
    "guaranteed";

}  // namespace

WaldComponents wald_components(const OutcomeTable& obs) {
  WaldComponents out;
  for (int k = 0; k < obs.strata(); ++k) {
    const auto& s = obs[k];
    const int m = s.treated();
    const int c = s.control();
    if (m < 2 || c < 2) {
      throw ValidationError("stratum " + std::to_string(k + 1) +
                            ": Wald interval needs at least two subjects in each arm");
    }
    StratumWald w;
    w.mean_treated = static_cast<double>(s.n11) / m;
    w.mean_control = static_cast<double>(s.n01) / c;
    w.var_treated = static_cast<double>(s.n11) * (m - s.n11) / (static_cast<double>(m) * (m - 1));
    w.var_control = static_cast<double>(s.n01) * (c - s.n01) / (static_cast<double>(c) * (c - 1));
    out.strata.push_back(w);
  }
  out.tau_hat = tau_hat(obs);
  out.variance = estimated_variance(obs);
  return out;
}

WaldResult wald_ci(const OutcomeTable& obs, double level) {
  check_level(level);
  WaldResult out;
  out.components = wald_components(obs);
  const double half = normal_quantile((1.0 + level) / 2.0) * std::sqrt(out.components.variance);
  const double lo = out.components.tau_hat - half;
  const double hi = out.components.tau_hat + half;
  out.interval = {std::max(lo, -1.0), std::min(hi, 1.0)};
  out.clipped = lo < -1.0 || hi > 1.0;
  return out;
}

const char* to_string(Combiner c) {
  switch (c) {
    case Combiner::Fisher:
      return "fisher";
    case Combiner::Tippett:
      return "tippett";
    case Combiner::Pearson:
      return "pearson";
    case Combiner::George:
      return "george";
    case Combiner::Stouffer:
      return "stouffer";
  }
  return "fisher";
}

const char* to_string(Method m) {
  switch (m) {
    case Method::Wald:
      return "wald";
    case Method::WS:
      return "ws";
    case Method::ESI:
      return "esi";
    case Method::SPT:
      return "spt";
    case Method::CPT:
      return "cpt";
  }
  return "spt";
}

ConfidenceResult spt_ci(const OutcomeTable& obs, double level, const SptOptions& options) {
  check_level(level);
  if (options.replicates < 0) throw ValidationError("replicate count must be non-negative");
  const auto start = Clock::now();
  const auto alloc = generate_allocations(obs.design(), options.replicates, options.seed);
  auto result = spt_ci(obs, level, alloc, options);
  result.runtime_ms = elapsed_ms(start);
  return result;
}

ConfidenceResult spt_ci(const OutcomeTable& obs, double level, const AllocationSet& alloc,
                        const SptOptions& options) {
  check_level(level);
  const auto start = Clock::now();
  detail::EngineOptions eo;
  eo.alpha = 1.0 - level;
  eo.stat = options.stat;
  eo.reduced = options.reduced;
  eo.memo = options.memo;
  eo.track_rr = options.track_rr;
  eo.threads = std::max(1, options.threads);
  eo.budget = options.budget;
  const auto engine = detail::run_spt_engine(obs, alloc, eo);
  ConfidenceResult out;
  out.method = "spt";
  out.n = obs.design().n();
  out.accepted = engine.accepted;
  out.interval = hull(engine.accepted, out.n);
  out.level = level;
  out.replicates = alloc.replicates();
  out.seed = alloc.seed();
  out.statistic = options.stat;
  out.tables_tested = engine.tables_tested;
  out.lo_witness = engine.lo_witness;
  out.hi_witness = engine.hi_witness;
  if (options.track_rr) out.rr_interval = rr_hull(engine.accepted_rr);
  if (options.stat == StatisticKind::Sterne) out.warnings.emplace_back(kSterneWarning);
  if (alloc.exhaustive()) out.warnings.emplace_back("exhaustive allocations: exact p-values");
  if (!out.interval) out.warnings.emplace_back("empty confidence set");
  out.runtime_ms = elapsed_ms(start);
  return out;
}

ConfidenceResult rr_spt_ci(const OutcomeTable& obs, double level, const SptOptions& options) {
  SptOptions opt = options;
  opt.track_rr = true;
  auto out = spt_ci(obs, level, opt);
  out.method = "spt-rr";
  out.interval = out.rr_interval;
  return out;
}

StratumPValueProfile cpt_stratum_profile(const OutcomeTable& obs, int k,
                                         const AllocationSet& alloc, StatisticKind stat,
                                         int threads) {
  if (stat == StatisticKind::Sterne) {
    throw ValidationError("the Sterne statistic is only available for SPT");
  }
  if (!(alloc.design() == obs.design())) {
    throw ValidationError("allocation set was drawn for a different design");
  }
  const auto tables = enumerate_stratum_tables(obs, k);
  const StatScale scale(obs.design());
  const auto& s = obs[k];
  const int n = s.total();
  const int m = s.treated();
  const int c = s.control();
  const std::int64_t c_obs = scale.stratum(k, s.n11, s.n01);
  const std::int64_t unit = scale.D() * n;
  const int R = alloc.replicates();
  const bool studentized = stat == StatisticKind::Studentized;
  auto stratum_variance = [&](int a, int b) {
    const double s1 = static_cast<double>(a) * (m - a) / (static_cast<double>(m) * (m - 1));
    const double s0 = static_cast<double>(b) * (c - b) / (static_cast<double>(c) * (c - 1));
    return s1 / m + s0 / c;
  };
  auto studentized_value = [](std::int64_t diff, std::int64_t scale_, double variance) {
    if (diff == 0) return 0.0;
    if (variance <= 0.0) return kInfinity;
    return std::abs(static_cast<double>(diff)) / static_cast<double>(scale_) / std::sqrt(variance);
  };
  if (studentized && (m < 2 || c < 2)) {
    throw ValidationError("stratum " + std::to_string(k + 1) +
                          ": studentized statistic needs at least two subjects per arm");
  }
  std::vector<std::int64_t> extreme(tables.size(), 0);
  const auto count = static_cast<std::int64_t>(tables.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(std::max(1, threads))
  for (std::int64_t i = 0; i < count; ++i) {
    const auto& v = tables[i];
    const std::int64_t center = scale.D() * v.effect();
    const std::int64_t t_obs = std::abs(c_obs - center);
    const double st_obs =
        studentized ? studentized_value(c_obs - center, unit, stratum_variance(s.n11, s.n01)) : 0.0;
    std::int64_t hits = 0;
    for (int r = 0; r < R; ++r) {
      const auto x = type_counts(alloc.subset(r, k), v);
      const int a = x[0] + x[1];
      const int b = v.v11 - x[0] + v.v01 - x[2];
      const std::int64_t diff = scale.stratum(k, a, b) - center;
      if (studentized) {
        if (detail::at_least(studentized_value(diff, unit, stratum_variance(a, b)), st_obs)) ++hits;
      } else if (std::abs(diff) >= t_obs) {
        ++hits;
      }
    }
    extreme[i] = hits;
  }
  StratumPValueProfile profile;
  profile.stratum = k;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const PValue p{extreme[i], R, alloc.exhaustive()};
    auto [it, inserted] = profile.pvalues.emplace(tables[i].effect(), p);
    if (!inserted && p.extreme > it->second.extreme) it->second = p;
  }
  return profile;
}

double tippett_cutoff(double alpha, int K) {
  return 1.0 - std::pow(1.0 - alpha, 1.0 / K);
}

CombinedTest combine_pvalues(Combiner c, std::span<const double> p, double alpha,
                             std::int64_t clamp_replicates) {
  if (p.empty()) throw ValidationError("no p-values to combine");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  for (double x : p) {
    if (!(x > 0.0 && x <= 1.0)) throw ValidationError("p-values must lie in (0, 1]");
  }
  const int K = static_cast<int>(p.size());
  const double ceiling = 1.0 - 1.0 / (2.0 * (static_cast<double>(clamp_replicates) + 1.0));
  CombinedTest out;
  auto clamp = [&](double x) {
    if (x < 1.0) return x;
    out.clamped = true;
    return ceiling;
  };
  switch (c) {
    case Combiner::Fisher: {
      double t = 0.0;
      for (double x : p) t += -2.0 * std::log(x);
      out.statistic = t;
      out.threshold = chi2_quantile(1.0 - alpha, 2 * K);
      out.reject = t >= out.threshold;
      break;
    }
    case Combiner::Tippett: {
      const double min_p = *std::min_element(p.begin(), p.end());
      out.statistic = 1.0 - std::pow(1.0 - min_p, K);
      out.threshold = alpha;
      out.reject = min_p <= tippett_cutoff(alpha, K);
      break;
    }
    case Combiner::Pearson: {
      double t = 0.0;
      for (double x : p) t += -2.0 * std::log1p(-clamp(x));
      out.statistic = t;
      out.threshold = chi2_quantile(alpha, 2 * K);
      out.reject = t <= out.threshold;
      break;
    }
    case Combiner::George: {
      double sum = 0.0;
      for (double x : p) {
        const double y = clamp(x);
        sum += std::log(y) - std::log1p(-y);
      }
      const double kd = K;
      const double factor =
          std::sqrt(3.0 * (5.0 * kd + 4.0) / ((5.0 * kd + 2.0) * kd * std::numbers::pi * std::numbers::pi));
      out.statistic = -factor * sum;
      out.threshold = student_t_quantile(1.0 - alpha, 5.0 * kd + 4.0);
      out.reject = out.statistic >= out.threshold;
      break;
    }
    case Combiner::Stouffer: {
      double sum = 0.0;
      for (double x : p) sum += -normal_quantile(clamp(x));
      out.statistic = sum / std::sqrt(static_cast<double>(K));
      out.threshold = normal_quantile(1.0 - alpha);
      out.reject = out.statistic >= out.threshold;
      break;
    }
  }
  return out;
}

CombinedTest combine_pvalues(Combiner c, std::span<const PValue> p, double alpha) {
  std::vector<double> values;
  std::int64_t replicates = 0;
  for (const auto& x : p) {
    values.push_back(x.value());
    replicates = std::max(replicates, x.replicates);
  }
  return combine_pvalues(c, values, alpha, replicates);
}

namespace {

struct ProfileEntry {
  int d = 0;
  PValue p;
  double fisher_term = 0.0;
};

class TupleSearch {
 public:
  TupleSearch(std::vector<std::vector<ProfileEntry>> entries, Combiner combiner, double alpha,
              int n)
      : entries_(std::move(entries)),
        combiner_(combiner),
        alpha_(alpha),
        n_(n),
        K_(static_cast<int>(entries_.size())),
        accepted_(2 * static_cast<std::size_t>(n) + 1, 0),
        chosen_(K_) {
    // Smallest Fisher term still available from stratum k onward.
    best_rest_.assign(K_ + 1, 0.0);
    for (int k = K_ - 1; k >= 0; --k) {
      double best = kInfinity;
      for (const auto& e : entries_[k]) best = std::min(best, e.fisher_term);
      best_rest_[k] = best_rest_[k + 1] + best;
    }
    if (combiner_ == Combiner::Fisher) {
      threshold_ = chi2_quantile(1.0 - alpha, 2 * K_);
      margin_ = 1e-9 * std::abs(threshold_);
    }
  }

  void run() { descend(0, 0, 0.0); }

  std::vector<std::int64_t> accepted() const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < accepted_.size(); ++i) {
      if (accepted_[i]) out.push_back(static_cast<std::int64_t>(i) - n_);
    }
    return out;
  }
  std::int64_t evaluated() const { return evaluated_; }

 private:
  void descend(int k, std::int64_t d_sum, double fisher_sum) {
    if (combiner_ == Combiner::Fisher && fisher_sum + best_rest_[k] > threshold_ + margin_) return;
    if (k == K_) {
      const auto idx = static_cast<std::size_t>(d_sum + n_);
      if (accepted_[idx]) return;
      ++evaluated_;
      std::vector<PValue> p(K_);
      for (int j = 0; j < K_; ++j) p[j] = chosen_[j]->p;
      if (!combine_pvalues(combiner_, p, alpha_).reject) accepted_[idx] = 1;
      return;
    }
    for (const auto& e : entries_[k]) {
      chosen_[k] = &e;
      descend(k + 1, d_sum + e.d, fisher_sum + e.fisher_term);
    }
  }

  std::vector<std::vector<ProfileEntry>> entries_;
  Combiner combiner_;
  double alpha_;
  int n_;
  int K_;
  std::vector<char> accepted_;
  std::vector<const ProfileEntry*> chosen_;
  std::vector<double> best_rest_;
  double threshold_ = 0.0;
  double margin_ = 0.0;
  std::int64_t evaluated_ = 0;
};

std::vector<StratumPValueProfile> all_profiles(const OutcomeTable& obs, const AllocationSet& alloc,
                                               StatisticKind stat, int threads) {
  std::vector<StratumPValueProfile> out;
  for (int k = 0; k < obs.strata(); ++k) {
    out.push_back(cpt_stratum_profile(obs, k, alloc, stat, threads));
  }
  return out;
}

}  // namespace

ConfidenceResult cpt_ci(const OutcomeTable& obs, double level, const CptOptions& options) {
  check_level(level);
  if (options.replicates < 0) throw ValidationError("replicate count must be non-negative");
  const auto start = Clock::now();
  const auto alloc = generate_allocations(obs.design(), options.replicates, options.seed);
  auto result = cpt_ci(obs, level, alloc, options);
  result.runtime_ms = elapsed_ms(start);
  return result;
}

ConfidenceResult cpt_ci(const OutcomeTable& obs, double level, const AllocationSet& alloc,
                        const CptOptions& options) {
  check_level(level);
  const auto start = Clock::now();
  const auto profiles = all_profiles(obs, alloc, options.stat, options.threads);
  double tuples = 1.0;
  for (const auto& p : profiles) tuples *= static_cast<double>(p.pvalues.size());
  if (tuples > static_cast<double>(options.budget)) {
    throw IntractableError("CPT would combine about " + std::to_string(static_cast<long long>(tuples)) +
                           " effect tuples, above the budget of " + std::to_string(options.budget) +
                           "; use ESI instead");
  }
  std::vector<std::vector<ProfileEntry>> entries;
  for (const auto& prof : profiles) {
    std::vector<ProfileEntry> row;
    for (const auto& [d, p] : prof.pvalues) row.push_back({d, p, -2.0 * std::log(p.value())});
    entries.push_back(std::move(row));
  }
  TupleSearch search(std::move(entries), options.combiner, 1.0 - level, obs.design().n());
  search.run();
  ConfidenceResult out;
  out.method = "cpt";
  out.n = obs.design().n();
  out.accepted = search.accepted();
  out.interval = hull(out.accepted, out.n);
  out.level = level;
  out.replicates = alloc.replicates();
  out.seed = alloc.seed();
  out.statistic = options.stat;
  out.combiner = options.combiner;
  out.tables_tested = search.evaluated();
  out.warnings.emplace_back("cpt: all strata share one allocation set");
  if (!out.interval) out.warnings.emplace_back("empty confidence set");
  out.runtime_ms = elapsed_ms(start);
  return out;
}

std::optional<Interval> cpt_tippett_shortcut(const OutcomeTable& obs, double level,
                                             const AllocationSet& alloc, StatisticKind stat) {
  check_level(level);
  const auto profiles = all_profiles(obs, alloc, stat, 1);
  const double cutoff = tippett_cutoff(1.0 - level, obs.strata());
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  for (const auto& prof : profiles) {
    std::optional<int> dmin;
    std::optional<int> dmax;
    for (const auto& [d, p] : prof.pvalues) {
      if (p.value() <= cutoff) continue;
      if (!dmin) dmin = d;
      dmax = d;
    }
    if (!dmin) return std::nullopt;
    lo += *dmin;
    hi += *dmax;
  }
  const double n = obs.design().n();
  return Interval{lo / n, hi / n};
}

std::optional<Interval> cpt_tippett_shortcut(const OutcomeTable& obs, double level,
                                             int replicates, std::uint64_t seed) {
  return cpt_tippett_shortcut(obs, level, generate_allocations(obs.design(), replicates, seed));
}

OutcomeTable complete_missing(const std::vector<StratumWithMissing>& strata, bool favor_treatment) {
  std::vector<StratumOutcome> out;
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const auto& s = strata[k];
    if (s.treated_missing < 0 || s.control_missing < 0) {
      throw ValidationError("stratum " + std::to_string(k + 1) + ": negative missing count");
    }
    StratumOutcome o = s.observed;
    if (favor_treatment) {
      o.n11 += s.treated_missing;
      o.n00 += s.control_missing;
    } else {
      o.n10 += s.treated_missing;
      o.n01 += s.control_missing;
    }
    out.push_back(o);
  }
  return OutcomeTable(std::move(out));
}

std::optional<Interval> missing_data_wrap(
    const std::vector<StratumWithMissing>& strata,
    const std::function<std::optional<Interval>(const OutcomeTable&)>& method) {
  const auto high = method(complete_missing(strata, true));
  const auto low = method(complete_missing(strata, false));
  if (!high) return low;
  if (!low) return high;
  return Interval{std::min(low->lo, high->lo), std::max(low->hi, high->hi)};
}

ConfidenceResult run_method(const OutcomeTable& obs, const MethodRequest& request) {
  check_level(request.level);
  const auto start = Clock::now();
  const bool rr = request.target == Target::RR;
  ConfidenceResult out;
  switch (request.method) {
    case Method::Wald: {
      if (rr) throw ValidationError("relative risk is available for ws, esi and spt only");
      const auto w = wald_ci(obs, request.level);
      out.interval = w.interval;
      out.warnings.emplace_back("wald: approximate interval; nominal coverage is not guaranteed");
      if (w.clipped) out.warnings.emplace_back("wald: interval clipped to [-1, 1]");
      break;
    }
    case Method::WS:
      out.interval = rr ? rr_bound_interval(obs, request.level, BoundSource::WS, request.ws_cap)
                        : ws_interval(obs, request.level, request.ws_cap);
      break;
    case Method::ESI:
      out.interval = rr ? rr_bound_interval(obs, request.level, BoundSource::ESI)
                        : esi_interval(obs, request.level);
      out.warnings.emplace_back(
          "esi: summed per-stratum Bonferroni bounds; conservative but usually widest");
      break;
    case Method::SPT: {
      SptOptions opt;
      opt.replicates = request.replicates;
      opt.seed = request.seed;
      opt.stat = request.stat;
      opt.budget = request.budget;
      opt.threads = request.threads;
      out = rr ? rr_spt_ci(obs, request.level, opt) : spt_ci(obs, request.level, opt);
      break;
    }
    case Method::CPT: {
      if (rr) throw ValidationError("relative risk is available for ws, esi and spt only");
      if (request.stat == StatisticKind::Sterne) {
        throw ValidationError("the Sterne statistic is only available for SPT");
      }
      CptOptions opt;
      opt.replicates = request.replicates;
      opt.seed = request.seed;
      opt.stat = request.stat;
      opt.combiner = request.combiner;
      opt.budget = request.budget;
      opt.threads = request.threads;
      out = cpt_ci(obs, request.level, opt);
      break;
    }
  }
  out.method = to_string(request.method);
  if (rr) out.method += "-rr";
  out.n = obs.design().n();
  out.level = request.level;
  out.runtime_ms = elapsed_ms(start);
  return out;
}

ConfidenceResult run_method(const std::vector<StratumWithMissing>& strata,
                            const MethodRequest& request) {
  bool any_missing = false;
  for (const auto& s : strata) any_missing = any_missing || s.treated_missing > 0 || s.control_missing > 0;
  if (!any_missing) {
    std::vector<StratumOutcome> counts;
    for (const auto& s : strata) counts.push_back(s.observed);
    return run_method(OutcomeTable(std::move(counts)), request);
  }
  const auto start = Clock::now();
  auto high = run_method(complete_missing(strata, true), request);
  const auto low = run_method(complete_missing(strata, false), request);
  ConfidenceResult out = high;
  if (!high.interval) {
    out.interval = low.interval;
  } else if (low.interval) {
    out.interval = Interval{std::min(low.interval->lo, high.interval->lo),
                            std::max(low.interval->hi, high.interval->hi)};
  }
  out.accepted.clear();
  out.lo_witness.reset();
  out.hi_witness.reset();
  out.rr_interval.reset();
  out.tables_tested = high.tables_tested + low.tables_tested;
  out.warnings.emplace_back("missing outcomes: envelope of the two extreme completions");
  out.runtime_ms = elapsed_ms(start);
  return out;
}

}  // namespace stratexact
