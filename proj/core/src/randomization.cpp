#include "stratexact/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "detail.hpp"
#include "stratexact/enumeration.hpp"
#include "stratexact/errors.hpp"
#include "stratexact/rng.hpp"

namespace stratexact {

AllocationSet::AllocationSet(Design design, int replicates, std::uint64_t seed, bool exhaustive,
                             std::vector<std::vector<std::uint16_t>> positions)
    : design_(std::move(design)),
      replicates_(replicates),
      seed_(seed),
      exhaustive_(exhaustive),
      positions_(std::move(positions)) {
  if (replicates_ < 0) throw ValidationError("replicate count must be non-negative");
  if (static_cast<int>(positions_.size()) != design_.strata()) {
    throw ValidationError("allocation set does not match the design's strata");
  }
  for (int k = 0; k < design_.strata(); ++k) {
    if (positions_[k].size() != static_cast<std::size_t>(replicates_) * design_[k].m) {
      throw ValidationError("allocation set stratum " + std::to_string(k + 1) +
                            " has the wrong number of positions");
    }
  }
}

AllocationSet generate_allocations(const Design& design, int replicates, std::uint64_t seed) {
  if (replicates < 0) throw ValidationError("replicate count must be non-negative");
  const int K = design.strata();
  std::vector<std::vector<std::uint16_t>> positions(K);
  for (int k = 0; k < K; ++k) {
    const int n = design[k].n;
    const int m = design[k].m;
    auto& out = positions[k];
    out.resize(static_cast<std::size_t>(replicates) * m);
    std::vector<std::uint16_t> deck(n);
    for (int r = 0; r < replicates; ++r) {
      std::iota(deck.begin(), deck.end(), std::uint16_t{0});
      Stream stream(stream_key(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k)));
      for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<int>(stream.below(static_cast<std::uint64_t>(n - i)));
        std::swap(deck[i], deck[j]);
      }
      auto first = out.begin() + static_cast<std::ptrdiff_t>(r) * m;
      std::copy(deck.begin(), deck.begin() + m, first);
      std::sort(first, first + m);
    }
  }
  return AllocationSet(design, replicates, seed, false, std::move(positions));
}

namespace {

std::vector<std::vector<std::uint16_t>> all_subsets(int n, int m) {
  std::vector<std::vector<std::uint16_t>> out;
  std::vector<std::uint16_t> current(m);
  std::iota(current.begin(), current.end(), std::uint16_t{0});
  while (true) {
    out.push_back(current);
    int i = m - 1;
    while (i >= 0 && current[i] == n - m + i) --i;
    if (i < 0) break;
    ++current[i];
    for (int j = i + 1; j < m; ++j) current[j] = static_cast<std::uint16_t>(current[j - 1] + 1);
  }
  return out;
}

}  // namespace

AllocationSet exhaustive_allocations(const Design& design, std::int64_t cap) {
  const int K = design.strata();
  std::vector<std::vector<std::vector<std::uint16_t>>> subsets(K);
  std::int64_t total = 1;
  for (int k = 0; k < K; ++k) {
    // Count before materializing so huge strata fail fast.
    double count = 1.0;
    for (int i = 0; i < design[k].m; ++i) {
      count = count * (design[k].n - i) / (i + 1);
    }
    if (count * static_cast<double>(total) > static_cast<double>(cap)) {
      throw IntractableError("full randomization has more than " + std::to_string(cap) +
                             " allocations; use Monte Carlo replicates");
    }
    subsets[k] = all_subsets(design[k].n, design[k].m);
    total *= static_cast<std::int64_t>(subsets[k].size());
  }
  std::vector<std::vector<std::uint16_t>> positions(K);
  for (int k = 0; k < K; ++k) positions[k].reserve(static_cast<std::size_t>(total) * design[k].m);
  std::vector<std::size_t> digit(K, 0);
  for (std::int64_t r = 0; r < total; ++r) {
    for (int k = 0; k < K; ++k) {
      const auto& s = subsets[k][digit[k]];
      positions[k].insert(positions[k].end(), s.begin(), s.end());
    }
    for (int k = 0; k < K; ++k) {
      if (++digit[k] < subsets[k].size()) break;
      digit[k] = 0;
    }
  }
  return AllocationSet(design, static_cast<int>(total), 0, true, std::move(positions));
}

std::array<int, 4> type_counts(std::span<const std::uint16_t> subset, const StratumPotential& v) {
  const auto below = [&](int p) {
    return static_cast<int>(std::lower_bound(subset.begin(), subset.end(), p) - subset.begin());
  };
  const int b1 = below(v.v11);
  const int b2 = below(v.v11 + v.v10);
  const int b3 = below(v.v11 + v.v10 + v.v01);
  return {b1, b2 - b1, b3 - b2, static_cast<int>(subset.size()) - b3};
}

TypeCounts type_counts(const AllocationSet& alloc, int r, const PotentialTable& v) {
  v.check_against(alloc.design());
  TypeCounts out;
  out.x.reserve(v.strata());
  for (int k = 0; k < v.strata(); ++k) out.x.push_back(type_counts(alloc.subset(r, k), v[k]));
  return out;
}

OutcomeTable induced_outcome(const PotentialTable& v, const TypeCounts& x) {
  std::vector<StratumOutcome> strata;
  strata.reserve(v.strata());
  for (int k = 0; k < v.strata(); ++k) {
    const auto& s = v[k];
    const auto& t = x.x[k];
    strata.push_back({t[0] + t[1], t[2] + t[3], s.v11 - t[0] + s.v01 - t[2],
                      s.v10 - t[1] + s.v00 - t[3]});
  }
  return OutcomeTable(std::move(strata));
}

double tau_hat_hypothetical_stratum(const StratumPotential& v, const std::array<int, 4>& x,
                                    int m) {
  const int control = v.total() - m;
  return static_cast<double>(x[0] + x[1]) / m -
         static_cast<double>(v.v11 - x[0] + v.v01 - x[2]) / control;
}

double tau_hat_hypothetical(const PotentialTable& v, const TypeCounts& x) {
  double sum = 0.0;
  for (int k = 0; k < v.strata(); ++k) {
    const int m = x.x[k][0] + x.x[k][1] + x.x[k][2] + x.x[k][3];
    sum += v[k].total() * tau_hat_hypothetical_stratum(v[k], x.x[k], m);
  }
  return sum / v.n();
}

StatScale::StatScale(const Design& design) {
  const int K = design.strata();
  for (int k = 0; k < K; ++k) {
    const std::int64_t n = design[k].n;
    const std::int64_t prod = static_cast<std::int64_t>(design[k].m) * design[k].control();
    const std::int64_t need = prod / std::gcd(n, prod);
    const __int128 next = static_cast<__int128>(d_ / std::gcd(d_, need)) * need;
    if (next * design.n() > (static_cast<__int128>(1) << 60)) {
      throw IntractableError("stratum sizes too irregular for exact integer statistics");
    }
    d_ = static_cast<std::int64_t>(next);
  }
  for (int k = 0; k < K; ++k) {
    const std::int64_t prod = static_cast<std::int64_t>(design[k].m) * design[k].control();
    w_.push_back(design[k].n * d_ / prod);
    n_.push_back(design[k].n);
    m_.push_back(design[k].m);
  }
}

std::int64_t StatScale::observed(const OutcomeTable& obs) const {
  std::int64_t q = 0;
  for (int k = 0; k < obs.strata(); ++k) q += stratum(k, obs[k].n11, obs[k].n01);
  return q;
}

std::int64_t scaled_tau_hat(const StatScale& scale, const PotentialTable& v, const TypeCounts& x) {
  std::int64_t q = 0;
  for (int k = 0; k < v.strata(); ++k) {
    const auto& s = v[k];
    const auto& t = x.x[k];
    const int m = t[0] + t[1] + t[2] + t[3];
    if (s.total() == 2 * m) {
      q += scale.D() * (s.effect() + (2 * t[0] - s.v11) - (2 * t[3] - s.v00));
    } else {
      q += scale.stratum(k, t[0] + t[1], s.v11 - t[0] + s.v01 - t[2]);
    }
  }
  return q;
}

const char* to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::AbsDiff:
      return "absdiff";
    case StatisticKind::Studentized:
      return "studentized";
    case StatisticKind::Sterne:
      return "sterne";
  }
  return "absdiff";
}

double estimated_variance(const OutcomeTable& obs) {
  const double n = obs.design().n();
  double v = 0.0;
  for (int k = 0; k < obs.strata(); ++k) {
    const auto& s = obs[k];
    const int m = s.treated();
    const int c = s.control();
    if (m < 2 || c < 2) {
      throw ValidationError("stratum " + std::to_string(k + 1) +
                            ": variance estimate needs at least two subjects per arm");
    }
    const double s1 = static_cast<double>(s.n11) * (m - s.n11) / (static_cast<double>(m) * (m - 1));
    const double s0 = static_cast<double>(s.n01) * (c - s.n01) / (static_cast<double>(c) * (c - 1));
    const double share = s.total() / n;
    v += share * share * (s1 / m + s0 / c);
  }
  return v;
}

namespace {

double studentized_scaled(std::int64_t diff, std::int64_t scale, double variance) {
  if (diff == 0) return 0.0;
  if (variance <= 0.0) return kInfinity;
  return std::abs(static_cast<double>(diff)) / static_cast<double>(scale) / std::sqrt(variance);
}

void check_inputs(const PotentialTable& v, const OutcomeTable& obs, const AllocationSet& alloc) {
  if (!(alloc.design() == obs.design())) {
    throw ValidationError("allocation set was drawn for a different design");
  }
  v.check_against(obs.design());
  if (!is_compatible(v, obs)) {
    throw ValidationError("potential table is not compatible with the observed table");
  }
}

}  // namespace

double studentized_stat(const PotentialTable& v, const OutcomeTable& outcome) {
  v.check_against(outcome.design());
  const StatScale scale(outcome.design());
  const std::int64_t diff = scale.observed(outcome) - scale.D() * tau(v).numerator;
  return studentized_scaled(diff, scale.D() * outcome.design().n(), estimated_variance(outcome));
}

PValue mc_pvalue(const PotentialTable& v, const OutcomeTable& obs, const AllocationSet& alloc,
                 StatisticKind stat) {
  if (stat == StatisticKind::Sterne) {
    throw ValidationError("the Sterne statistic defines a region, not a p-value");
  }
  check_inputs(v, obs, alloc);
  const StatScale scale(obs.design());
  const std::int64_t center = scale.D() * tau(v).numerator;
  const std::int64_t total_scale = scale.D() * obs.design().n();
  PValue p{0, alloc.replicates(), alloc.exhaustive()};
  if (stat == StatisticKind::AbsDiff) {
    const std::int64_t t_obs = std::abs(scale.observed(obs) - center);
    for (int r = 0; r < alloc.replicates(); ++r) {
      const std::int64_t t = std::abs(scaled_tau_hat(scale, v, type_counts(alloc, r, v)) - center);
      if (t >= t_obs) ++p.extreme;
    }
    return p;
  }
  const double t_obs =
      studentized_scaled(scale.observed(obs) - center, total_scale, estimated_variance(obs));
  for (int r = 0; r < alloc.replicates(); ++r) {
    const auto x = type_counts(alloc, r, v);
    const auto outcome = induced_outcome(v, x);
    const double t = studentized_scaled(scaled_tau_hat(scale, v, x) - center, total_scale,
                                        estimated_variance(outcome));
    if (detail::at_least(t, t_obs)) ++p.extreme;
  }
  return p;
}

PValue exact_pvalue(const PotentialTable& v, const OutcomeTable& obs, StatisticKind stat,
                    std::int64_t cap) {
  return mc_pvalue(v, obs, exhaustive_allocations(obs.design(), cap), stat);
}

std::optional<Interval> sterne_region(const PotentialTable& v, const AllocationSet& alloc,
                                      double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  v.check_against(alloc.design());
  const std::int64_t need = detail::sterne_count(alpha, alloc.replicates());
  if (need == 0) return std::nullopt;
  const StatScale scale(alloc.design());
  std::vector<std::int64_t> q(alloc.replicates());
  for (int r = 0; r < alloc.replicates(); ++r) q[r] = scaled_tau_hat(scale, v, type_counts(alloc, r, v));
  std::sort(q.begin(), q.end());
  const auto [lo, hi] = detail::sterne_window(q, need, 2 * scale.D() * tau(v).numerator);
  const double denom = static_cast<double>(scale.D()) * alloc.design().n();
  return Interval{lo / denom, hi / denom};
}

}  // namespace stratexact
