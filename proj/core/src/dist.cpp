#include "stratexact/dist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "stratexact/errors.hpp"

namespace stratexact {
namespace {

constexpr int kExactLimit = 64;

// C(n, k) for n <= 64 fits in 64 bits.
const std::array<std::array<std::uint64_t, kExactLimit + 1>, kExactLimit + 1>& pascal() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, kExactLimit + 1>, kExactLimit + 1> t{};
    for (int n = 0; n <= kExactLimit; ++n) {
      t[n][0] = 1;
      for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
    }
    return t;
  }();
  return table;
}

constexpr int kLogFactorialCache = 1 << 17;

double log_factorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(kLogFactorialCache);
    for (int i = 0; i < kLogFactorialCache; ++i) t[i] = std::lgamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  if (n < kLogFactorialCache) return table[n];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_choose(int n, int k) { return log_factorial(n) - log_factorial(k) - log_factorial(n - k); }

void check_params(const HypergeomParams& p) {
  if (p.population < 0 || p.successes < 0 || p.draws < 0 || p.successes > p.population ||
      p.draws > p.population) {
    throw ValidationError("invalid hypergeometric parameters (N=" + std::to_string(p.population) +
                          ", G=" + std::to_string(p.successes) +
                          ", d=" + std::to_string(p.draws) + ")");
  }
}

int support_lo(const HypergeomParams& p) {
  return std::max(0, p.draws - (p.population - p.successes));
}
int support_hi(const HypergeomParams& p) { return std::min(p.successes, p.draws); }

double pmf_unchecked(int k, const HypergeomParams& p) {
  if (k < support_lo(p) || k > support_hi(p)) return 0.0;
  const int N = p.population;
  const int G = p.successes;
  const int d = p.draws;
  if (N <= kExactLimit) {
    const auto& c = pascal();
    const long double num = static_cast<long double>(c[G][k]) * c[N - G][d - k];
    return static_cast<double>(num / c[N][d]);
  }
  return std::exp(log_choose(G, k) + log_choose(N - G, d - k) - log_choose(N, d));
}

// Neumaier summation of pmf over [from, to].
double tail_sum(int from, int to, const HypergeomParams& p) {
  double sum = 0.0;
  double comp = 0.0;
  for (int k = from; k <= to; ++k) {
    const double x = pmf_unchecked(k, p);
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return std::clamp(sum + comp, 0.0, 1.0);
}

void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError(std::string(what) + " must lie in (0, 1), got " + std::to_string(p));
  }
}

}  // namespace

double hypergeom_pmf(int k, const HypergeomParams& p) {
  check_params(p);
  return pmf_unchecked(k, p);
}

double hypergeom_cdf(int k, const HypergeomParams& p) {
  check_params(p);
  const int lo = support_lo(p);
  const int hi = support_hi(p);
  if (k < lo) return 0.0;
  if (k >= hi) return 1.0;
  return tail_sum(lo, k, p);
}

double hypergeom_sf(int k, const HypergeomParams& p) {
  check_params(p);
  const int lo = support_lo(p);
  const int hi = support_hi(p);
  if (k <= lo) return 1.0;
  if (k > hi) return 0.0;
  return tail_sum(k, hi, p);
}

IntRange hypergeom_param_ci(int observed, int population, int draws, double level) {
  check_probability(level, "confidence level");
  if (observed < 0 || draws < observed || population < draws) {
    throw ValidationError("hypergeometric CI needs 0 <= observed <= draws <= population");
  }
  const double side = (1.0 - level) / 2.0;
  IntRange out{observed, population - (draws - observed)};
  for (int g = observed; g <= population - (draws - observed); ++g) {
    if (hypergeom_sf(observed, {population, g, draws}) > side) {
      out.lo = g;
      break;
    }
  }
  for (int g = population - (draws - observed); g >= observed; --g) {
    if (hypergeom_cdf(observed, {population, g, draws}) > side) {
      out.hi = g;
      break;
    }
  }
  return out;
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<>{}, x); }

double normal_quantile(double p) {
  check_probability(p, "normal quantile probability");
  return boost::math::quantile(boost::math::normal_distribution<>{}, p);
}

double chi2_quantile(double p, int dof) {
  check_probability(p, "chi-square quantile probability");
  if (dof < 1) throw ValidationError("chi-square degrees of freedom must be >= 1");
  return boost::math::quantile(boost::math::chi_squared_distribution<>(dof), p);
}

double chi2_sf(double x, int dof) {
  if (dof < 1) throw ValidationError("chi-square degrees of freedom must be >= 1");
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(dof), x));
}

double student_t_quantile(double p, double dof) {
  check_probability(p, "t quantile probability");
  return boost::math::quantile(boost::math::students_t_distribution<>(dof), p);
}

double student_t_sf(double x, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<>(dof), x));
}

}  // namespace stratexact
