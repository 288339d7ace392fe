#pragma once

// Shared treatment allocations, type counts under a hypothesized table, test
// statistics and randomization p-values.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stratexact/model.hpp"

namespace stratexact {

/// R allocations of the design. Replicate r treats, in stratum k, the sorted
/// 0-based positions subset(r, k). An exhaustive set lists every joint
/// allocation exactly once; its p-values carry no +1 correction.
class AllocationSet {
 public:
  AllocationSet() = default;
  AllocationSet(Design design, int replicates, std::uint64_t seed, bool exhaustive,
                std::vector<std::vector<std::uint16_t>> positions);

  const Design& design() const { return design_; }
  int replicates() const { return replicates_; }
  std::uint64_t seed() const { return seed_; }
  bool exhaustive() const { return exhaustive_; }

  std::span<const std::uint16_t> subset(int r, int k) const {
    const int m = design_[k].m;
    return {positions_[k].data() + static_cast<std::size_t>(r) * m, static_cast<std::size_t>(m)};
  }

  friend bool operator==(const AllocationSet&, const AllocationSet&) = default;

 private:
  Design design_;
  int replicates_ = 0;
  std::uint64_t seed_ = 0;
  bool exhaustive_ = false;
  std::vector<std::vector<std::uint16_t>> positions_;  // per stratum, R * m_k entries
};

/// Uniform m_k-subsets drawn independently for every (replicate, stratum)
/// from the stream keyed by (seed, r, k). R = 0 yields an empty set.
AllocationSet generate_allocations(const Design& design, int replicates, std::uint64_t seed);

inline constexpr std::int64_t kDefaultExhaustiveCap = 1'000'000;

/// Every joint allocation, stratum 0 varying fastest. Throws IntractableError
/// when prod_k C(n_k, m_k) exceeds `cap`.
AllocationSet exhaustive_allocations(const Design& design,
                                     std::int64_t cap = kDefaultExhaustiveCap);

/// Treated subjects by potential type, (x11, x10, x01, x00) per stratum.
struct TypeCounts {
  std::vector<std::array<int, 4>> x;
  friend bool operator==(const TypeCounts&, const TypeCounts&) = default;
};

/// Counts under the canonical unpacking of v, by binary search on the sorted
/// subsets of replicate r.
TypeCounts type_counts(const AllocationSet& alloc, int r, const PotentialTable& v);
std::array<int, 4> type_counts(std::span<const std::uint16_t> subset, const StratumPotential& v);

/// Observed table produced by v under the allocation summarized by x.
OutcomeTable induced_outcome(const PotentialTable& v, const TypeCounts& x);

double tau_hat_hypothetical(const PotentialTable& v, const TypeCounts& x);
double tau_hat_hypothetical_stratum(const StratumPotential& v, const std::array<int, 4>& x,
                                    int m);

/// Integer scale under which every stratum contribution n_k * tau_hat_k is
/// exact: D * n_k * tau_hat_k = w_k * (A * (n_k - m_k) - B * m_k), with A and B
/// the treated and control responders.
class StatScale {
 public:
  explicit StatScale(const Design& design);

  std::int64_t D() const { return d_; }
  std::int64_t weight(int k) const { return w_[k]; }
  std::int64_t stratum(int k, int treated_ones, int control_ones) const {
    return w_[k] * (static_cast<std::int64_t>(treated_ones) * (n_[k] - m_[k]) -
                    static_cast<std::int64_t>(control_ones) * m_[k]);
  }
  /// D * n * tau_hat of an observed table.
  std::int64_t observed(const OutcomeTable& obs) const;

 private:
  std::int64_t d_ = 1;
  std::vector<std::int64_t> w_;
  std::vector<int> n_;
  std::vector<int> m_;
};

/// D * n * tau_hat(v, z), using the balanced-stratum closed form
/// d_k + (2 x11 - v11) - (2 x00 - v00) wherever n_k = 2 m_k.
std::int64_t scaled_tau_hat(const StatScale& scale, const PotentialTable& v, const TypeCounts& x);

enum class StatisticKind { AbsDiff, Studentized, Sterne };

const char* to_string(StatisticKind kind);

/// Randomization p-value as a count. Monte Carlo sets give
/// (extreme + 1) / (replicates + 1); exhaustive sets give extreme / replicates.
struct PValue {
  std::int64_t extreme = 0;
  std::int64_t replicates = 0;
  bool exact_enumeration = false;

  double value() const {
    if (exact_enumeration) {
      return replicates == 0 ? 1.0 : static_cast<double>(extreme) / replicates;
    }
    return static_cast<double>(extreme + 1) / static_cast<double>(replicates + 1);
  }
};

/// Variance estimate of tau_hat from an outcome table (unbiased within-arm
/// sample variances). Requires at least two subjects per arm.
double estimated_variance(const OutcomeTable& obs);

/// |tau_hat(outcome) - tau(v)| / sqrt(estimated_variance(outcome)); a zero
/// variance gives +inf for a non-zero difference and 0 otherwise.
double studentized_stat(const PotentialTable& v, const OutcomeTable& outcome);

/// p-value of v with the absolute-difference or studentized statistic; ties
/// count as extreme. Throws ValidationError for incompatible v or for Sterne.
PValue mc_pvalue(const PotentialTable& v, const OutcomeTable& obs, const AllocationSet& alloc,
                 StatisticKind stat = StatisticKind::AbsDiff);

/// Exact p-value over every joint allocation.
PValue exact_pvalue(const PotentialTable& v, const OutcomeTable& obs,
                    StatisticKind stat = StatisticKind::AbsDiff,
                    std::int64_t cap = kDefaultExhaustiveCap);

/// Shortest window of replicate tau_hat values holding at least
/// ceil((1 - alpha) R) replicates; ties prefer the window centred nearest
/// tau(v), then the leftmost. nullopt when no replicate is required.
std::optional<Interval> sterne_region(const PotentialTable& v, const AllocationSet& alloc,
                                      double alpha);

}  // namespace stratexact
