#pragma once

// Intervals for the ATE and relative risk built from simultaneous bounds on
// the numbers of subjects who would respond under treatment (v1.) and under
// control (v.1).

#include <vector>

#include "stratexact/dist.hpp"
#include "stratexact/model.hpp"

namespace stratexact {

inline constexpr double kDefaultWsCap = 1e7;

enum class BoundSource { WS, ESI };

struct ParameterBounds {
  IntRange treated_ones;  // v1.
  IntRange control_ones;  // v.1
};

/// Bound on the total number of marked items sum_k G_k when X_k ~
/// Hypergeo(population_k, G_k, draws_k) independently and sum_k X_k is observed.
/// A total t is kept unless, for every composition of t, the upper (for the
/// lower end) or lower (for the upper end) tail of the observed sum is at most
/// `alpha_side`. Throws IntractableError when prod_k (population_k + 1)
/// exceeds `cap`.
IntRange ws_total_interval(const std::vector<int>& observed, const std::vector<int>& population,
                           const std::vector<int>& draws, double alpha_side,
                           double cap = kDefaultWsCap);

/// Both parameters at (1 - level) / 4 per tail.
ParameterBounds ws_parameter_bounds(const OutcomeTable& obs, double level,
                                    double cap = kDefaultWsCap);

/// Per-stratum parameter intervals at level 1 - (1 - level) / (2K), summed.
ParameterBounds esi_parameter_bounds(const OutcomeTable& obs, double level);

/// [(v1.lo - v.1hi) / n, (v1.hi - v.1lo) / n].
Interval ate_from_bounds(const ParameterBounds& b, int n);

Interval single_stratum_bound_ci(const OutcomeTable& obs, double level);
Interval ws_interval(const OutcomeTable& obs, double level, double cap = kDefaultWsCap);
Interval esi_interval(const OutcomeTable& obs, double level);

/// [v1.lo / v.1hi, v1.hi / v.1lo] over [0, inf]: a zero numerator gives 0,
/// a zero denominator gives +inf.
Interval rr_from_bounds(const ParameterBounds& b);
Interval rr_bound_interval(const OutcomeTable& obs, double level,
                           BoundSource source = BoundSource::ESI, double cap = kDefaultWsCap);

}  // namespace stratexact
