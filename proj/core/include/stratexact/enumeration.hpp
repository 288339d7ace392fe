#pragma once

// Compatibility of potential-outcome tables with observed data, per-stratum
// table enumeration and the representative tables of the balanced-stratum
// reduction.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "stratexact/dist.hpp"
#include "stratexact/model.hpp"

namespace stratexact {

/// Range of the stratum effect numerator d = v10 - v01 compatible with the
/// observed stratum once v11 and v00 are fixed. Every admissible d has the
/// parity of n - v11 - v00, so the range is walked in steps of two.
std::optional<IntRange> effect_bounds(const StratumOutcome& obs, int v11, int v00);

bool is_compatible(const StratumPotential& v, const StratumOutcome& obs);
bool is_compatible(const PotentialTable& v, const OutcomeTable& obs);

/// All d = v10 - v01 reachable by some compatible stratum table:
/// [n11 + n00 - n, n11 + n00].
IntRange attainable_effect_range(const StratumOutcome& obs);

/// Compatible tables of stratum k in lexicographic (v11, v10, v01, v00) order.
std::vector<StratumPotential> enumerate_stratum_tables(const OutcomeTable& obs, int k);

/// The subset with v10 - v01 = d. Throws ValidationError when d lies outside
/// attainable_effect_range.
std::vector<StratumPotential> enumerate_stratum_tables_with_tau(const OutcomeTable& obs, int k,
                                                                int d);

/// Subjects 0..n-1 of a stratum laid out as consecutive blocks of types
/// 11, 10, 01, 00.
struct CanonicalUnpacking {
  std::array<int, 4> end{};  // exclusive block ends

  static CanonicalUnpacking of(const StratumPotential& v) {
    return {{v.v11, v.v11 + v.v10, v.v11 + v.v10 + v.v01, v.total()}};
  }
  /// 0 = type 11, 1 = type 10, 2 = type 01, 3 = type 00.
  int type_of(int position) const {
    int t = 0;
    while (t < 3 && position >= end[t]) ++t;
    return t;
  }
  int response_if_treated(int position) const { return type_of(position) <= 1 ? 1 : 0; }
  int response_if_control(int position) const {
    const int t = type_of(position);
    return t == 0 || t == 2 ? 1 : 0;
  }
};

/// Equivalence-class key: v11 and v00 for every stratum, v10 for unbalanced
/// strata, and the summed effect numerator over the balanced strata. Vectors
/// are indexed in the design's stratum order; u10 entries of balanced strata
/// are ignored.
struct RepresentativeKey {
  std::vector<int> u11;
  std::vector<int> u00;
  std::vector<int> u10;
  std::int64_t a = 0;
};

/// A compatible table in the class of `key`, or nullopt when the class is
/// empty. Balanced strata start at their lowest compatible effect and are
/// raised in stratum order until their effects sum to `a`.
std::optional<PotentialTable> representative_table(const RepresentativeKey& key,
                                                   const OutcomeTable& obs);

}  // namespace stratexact
