#pragma once

// Exact hypergeometric probabilities and the handful of continuous quantiles
// the interval methods need.

namespace stratexact {

/// Population of `population` items, `successes` of them marked, `draws`
/// drawn without replacement.
struct HypergeomParams {
  int population = 0;
  int successes = 0;
  int draws = 0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

double hypergeom_pmf(int k, const HypergeomParams& p);
/// P(X <= k), clamped to [0, 1].
double hypergeom_cdf(int k, const HypergeomParams& p);
/// P(X >= k), summed directly over the upper tail.
double hypergeom_sf(int k, const HypergeomParams& p);

/// Equal-tail test inversion for the number of marked items. The lower end is
/// the smallest G with P(X >= observed | G) > (1 - level) / 2, the upper end
/// the largest G with P(X <= observed | G) > (1 - level) / 2.
IntRange hypergeom_param_ci(int observed, int population, int draws, double level);

double normal_cdf(double x);
double normal_quantile(double p);
double chi2_quantile(double p, int dof);
/// Upper tail P(X >= x) for X ~ chi-square(dof).
double chi2_sf(double x, int dof);
double student_t_quantile(double p, double dof);
double student_t_sf(double x, double dof);

}  // namespace stratexact
