#pragma once

// Domain model for stratified binary experiments: designs, observed outcome
// tables, potential-outcome tables and exact ATE numerators.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace stratexact {

struct StratumSize {
  int n = 0;  // subjects in the stratum
  int m = 0;  // subjects assigned to treatment

  int control() const { return n - m; }
  bool balanced() const { return n == 2 * m; }
  friend bool operator==(const StratumSize&, const StratumSize&) = default;
};

/// Randomization scheme: simple random sampling of m_k of n_k subjects,
/// independently in each stratum. Both arms are non-empty in every stratum.
class Design {
 public:
  Design() = default;
  explicit Design(std::vector<StratumSize> strata);

  int strata() const { return static_cast<int>(strata_.size()); }
  const StratumSize& operator[](int k) const { return strata_[k]; }
  std::span<const StratumSize> sizes() const { return strata_; }

  int n() const;
  int m() const;
  int balanced_count() const;

  friend bool operator==(const Design&, const Design&) = default;

 private:
  std::vector<StratumSize> strata_;
};

/// Observed counts in one stratum. First index is the assignment
/// (1 = treated), second the observed response.
struct StratumOutcome {
  int n11 = 0;  // treated, response 1
  int n10 = 0;  // treated, response 0
  int n01 = 0;  // control, response 1
  int n00 = 0;  // control, response 0

  int total() const { return n11 + n10 + n01 + n00; }
  int treated() const { return n11 + n10; }
  int control() const { return n01 + n00; }
  int ones() const { return n11 + n01; }
  int zeros() const { return n10 + n00; }
  friend bool operator==(const StratumOutcome&, const StratumOutcome&) = default;
};

class OutcomeTable {
 public:
  OutcomeTable() = default;
  /// The design is derived from the counts (n_k = total, m_k = treated).
  explicit OutcomeTable(std::vector<StratumOutcome> strata);

  const Design& design() const { return design_; }
  int strata() const { return design_.strata(); }
  const StratumOutcome& operator[](int k) const { return strata_[k]; }
  std::span<const StratumOutcome> counts() const { return strata_; }

  friend bool operator==(const OutcomeTable&, const OutcomeTable&) = default;

 private:
  Design design_;
  std::vector<StratumOutcome> strata_;
};

/// Counts of subjects in one stratum by (response if treated, response if
/// control).
struct StratumPotential {
  int v11 = 0;
  int v10 = 0;
  int v01 = 0;
  int v00 = 0;

  int total() const { return v11 + v10 + v01 + v00; }
  int treated_ones() const { return v11 + v10; }  // v_{k1.}
  int control_ones() const { return v11 + v01; }  // v_{k.1}
  int effect() const { return v10 - v01; }        // n_k * tau_k
  friend bool operator==(const StratumPotential&, const StratumPotential&) = default;
  friend auto operator<=>(const StratumPotential&, const StratumPotential&) = default;
};

class PotentialTable {
 public:
  PotentialTable() = default;
  explicit PotentialTable(std::vector<StratumPotential> strata);

  int strata() const { return static_cast<int>(strata_.size()); }
  const StratumPotential& operator[](int k) const { return strata_[k]; }
  std::span<const StratumPotential> counts() const { return strata_; }

  int n() const;
  int treated_ones() const;  // v_{1.}
  int control_ones() const;  // v_{.1}

  /// Throws ValidationError unless every stratum sums to the design's n_k.
  void check_against(const Design& design) const;

  friend bool operator==(const PotentialTable&, const PotentialTable&) = default;

 private:
  std::vector<StratumPotential> strata_;
};

/// An ATE held exactly as numerator / n.
struct TauValue {
  std::int64_t numerator = 0;
  int n = 1;

  double value() const { return static_cast<double>(numerator) / n; }
  friend bool operator==(const TauValue&, const TauValue&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

TauValue tau(const PotentialTable& v);

/// Unbiased stratified estimate; stratum estimates are n11/m - n01/(n-m).
double tau_hat(const OutcomeTable& obs);
double tau_hat_stratum(const StratumOutcome& obs);

/// The observed table produced when every subject's response equals the one
/// observed (strong null completion).
PotentialTable no_effect_completion(const OutcomeTable& obs);

}  // namespace stratexact
