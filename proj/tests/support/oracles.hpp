#pragma once

// Brute-force reference implementations used by the tests. They work at the
// subject level and share no code with the library beyond the model types.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "stratexact/model.hpp"

namespace oracle {

using stratexact::OutcomeTable;
using stratexact::PotentialTable;
using stratexact::StratumOutcome;
using stratexact::StratumPotential;

/// Exact rational with a positive denominator, kept in lowest terms.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  friend Rational operator+(Rational a, Rational b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend Rational operator-(Rational a, Rational b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
  friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }
  friend bool operator<=(Rational a, Rational b) { return !(b < a); }
  Rational abs() const { return {num < 0 ? -num : num, den}; }
};

/// Subject-level potential outcomes of one stratum: types 11, 10, 01, 00 in
/// blocks.
struct Subjects {
  std::vector<int> y1;
  std::vector<int> y0;
};

inline Subjects unpack(const StratumPotential& v) {
  Subjects s;
  auto add = [&](int count, int a, int b) {
    for (int i = 0; i < count; ++i) {
      s.y1.push_back(a);
      s.y0.push_back(b);
    }
  };
  add(v.v11, 1, 1);
  add(v.v10, 1, 0);
  add(v.v01, 0, 1);
  add(v.v00, 0, 0);
  return s;
}

/// All m-subsets of {0..n-1} as bitmasks.
inline std::vector<std::uint32_t> subsets(int n, int m) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) == m) out.push_back(mask);
  }
  return out;
}

inline StratumOutcome observe(const Subjects& s, std::uint32_t treated) {
  StratumOutcome o;
  for (std::size_t i = 0; i < s.y1.size(); ++i) {
    if (treated >> i & 1u) {
      (s.y1[i] ? o.n11 : o.n10)++;
    } else {
      (s.y0[i] ? o.n01 : o.n00)++;
    }
  }
  return o;
}

/// Observed stratum tables reachable from v with m treated.
inline std::set<std::array<int, 4>> reachable(const StratumPotential& v, int m) {
  std::set<std::array<int, 4>> out;
  const auto s = unpack(v);
  for (auto mask : subsets(v.total(), m)) {
    const auto o = observe(s, mask);
    out.insert({o.n11, o.n10, o.n01, o.n00});
  }
  return out;
}

inline bool compatible_by_search(const StratumPotential& v, const StratumOutcome& obs) {
  if (v.total() != obs.total()) return false;
  return reachable(v, obs.treated()).count({obs.n11, obs.n10, obs.n01, obs.n00}) > 0;
}

/// n * tau_hat of a stratum, exactly: n (y1 mean over treated - y0 mean over control).
inline Rational stratum_tau_hat_times_n(const StratumOutcome& o) {
  const int n = o.total();
  return Rational(static_cast<std::int64_t>(n) * o.n11, o.treated()) -
         Rational(static_cast<std::int64_t>(n) * o.n01, o.control());
}

/// tau_hat of a stratified table as an exact rational.
inline Rational tau_hat(const std::vector<StratumOutcome>& strata) {
  Rational sum;
  int n = 0;
  for (const auto& o : strata) {
    sum = sum + stratum_tau_hat_times_n(o);
    n += o.total();
  }
  return sum * Rational(1, n);
}

/// Every stratum table with n subjects.
inline std::vector<StratumPotential> all_stratum_tables(int n) {
  std::vector<StratumPotential> out;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; a + b <= n; ++b)
      for (int c = 0; a + b + c <= n; ++c) out.push_back({a, b, c, n - a - b - c});
  return out;
}

/// Naive exact SPT for two strata: every pair of stratum tables, every joint
/// assignment, exact rational statistics. Returns accepted n * tau values.
inline std::set<std::int64_t> naive_exact_spt(const OutcomeTable& obs, double alpha) {
  const auto& d = obs.design();
  const int K = obs.strata();
  std::vector<std::vector<StratumPotential>> tables(K);
  std::vector<std::vector<std::uint32_t>> masks(K);
  for (int k = 0; k < K; ++k) {
    tables[k] = all_stratum_tables(d[k].n);
    masks[k] = subsets(d[k].n, d[k].m);
  }
  std::vector<StratumOutcome> observed(obs.counts().begin(), obs.counts().end());
  const Rational observed_hat = tau_hat(observed);
  std::set<std::int64_t> accepted;
  std::vector<int> idx(K, 0);
  while (true) {
    std::vector<StratumPotential> strata;
    for (int k = 0; k < K; ++k) strata.push_back(tables[k][idx[k]]);
    const PotentialTable v(strata);
    std::int64_t effect = 0;
    for (const auto& s : strata) effect += s.v10 - s.v01;
    const Rational tau(effect, v.n());
    bool compatible = false;
    std::int64_t total = 0;
    std::int64_t extreme = 0;
    std::vector<Subjects> subj;
    for (const auto& s : strata) subj.push_back(unpack(s));
    std::vector<int> a(K, 0);
    const Rational t_obs = (observed_hat - tau).abs();
    while (true) {
      std::vector<StratumOutcome> induced;
      for (int k = 0; k < K; ++k) induced.push_back(observe(subj[k], masks[k][a[k]]));
      if (induced == observed) compatible = true;
      if (t_obs <= (tau_hat(induced) - tau).abs()) ++extreme;
      ++total;
      int k = 0;
      while (k < K && ++a[k] == static_cast<int>(masks[k].size())) a[k++] = 0;
      if (k == K) break;
    }
    if (compatible && static_cast<double>(extreme) / static_cast<double>(total) > alpha) {
      accepted.insert(effect);
    }
    int k = 0;
    while (k < K && ++idx[k] == static_cast<int>(tables[k].size())) idx[k++] = 0;
    if (k == K) break;
  }
  return accepted;
}

}  // namespace oracle
