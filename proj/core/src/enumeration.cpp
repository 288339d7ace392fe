#include "stratexact/enumeration.hpp"

#include <algorithm>
#include <string>

#include "stratexact/errors.hpp"

namespace stratexact {

std::optional<IntRange> effect_bounds(const StratumOutcome& obs, int v11, int v00) {
  const int n = obs.total();
  if (v11 < 0 || v00 < 0 || v11 + v00 > n) return std::nullopt;
  if (v11 > obs.n11 + obs.n01 || v00 > obs.n10 + obs.n00) return std::nullopt;
  const int lo = std::max({2 * obs.n11 - n - v11 + v00, -n + v11 + v00,
                           n - v11 - v00 - 2 * obs.n01 - 2 * obs.n10,
                           v11 - n - v00 + 2 * obs.n00});
  const int hi = std::min({v11 + n - v00 - 2 * obs.n01, n + v11 + v00 - 2 * obs.n01 - 2 * obs.n10,
                           n - v11 - v00, n - v11 + v00 - 2 * obs.n10});
  if (lo > hi) return std::nullopt;
  return IntRange{lo, hi};
}

bool is_compatible(const StratumPotential& v, const StratumOutcome& obs) {
  if (v.v10 < 0 || v.v01 < 0 || v.total() != obs.total()) return false;
  const auto range = effect_bounds(obs, v.v11, v.v00);
  if (!range) return false;
  const int d = v.effect();
  return range->lo <= d && d <= range->hi;
}

bool is_compatible(const PotentialTable& v, const OutcomeTable& obs) {
  if (v.strata() != obs.strata()) return false;
  for (int k = 0; k < v.strata(); ++k) {
    if (!is_compatible(v[k], obs[k])) return false;
  }
  return true;
}

IntRange attainable_effect_range(const StratumOutcome& obs) {
  return {obs.n11 + obs.n00 - obs.total(), obs.n11 + obs.n00};
}

namespace {

void check_stratum(const OutcomeTable& obs, int k) {
  if (k < 0 || k >= obs.strata()) {
    throw ValidationError("stratum index " + std::to_string(k) + " out of range");
  }
}

template <typename Keep>
std::vector<StratumPotential> enumerate_filtered(const StratumOutcome& s, Keep keep) {
  std::vector<StratumPotential> out;
  const int n = s.total();
  for (int v11 = 0; v11 <= s.n11 + s.n01; ++v11) {
    for (int v10 = 0; v10 <= n - v11; ++v10) {
      for (int v01 = 0; v01 <= n - v11 - v10; ++v01) {
        const StratumPotential v{v11, v10, v01, n - v11 - v10 - v01};
        if (keep(v.effect()) && is_compatible(v, s)) out.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<StratumPotential> enumerate_stratum_tables(const OutcomeTable& obs, int k) {
  check_stratum(obs, k);
  return enumerate_filtered(obs[k], [](int) { return true; });
}

std::vector<StratumPotential> enumerate_stratum_tables_with_tau(const OutcomeTable& obs, int k,
                                                                int d) {
  check_stratum(obs, k);
  const auto range = attainable_effect_range(obs[k]);
  if (d < range.lo || d > range.hi) {
    throw ValidationError("stratum " + std::to_string(k + 1) + ": effect numerator " +
                          std::to_string(d) + " outside attainable range [" +
                          std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
  }
  return enumerate_filtered(obs[k], [d](int e) { return e == d; });
}

std::optional<PotentialTable> representative_table(const RepresentativeKey& key,
                                                   const OutcomeTable& obs) {
  const int K = obs.strata();
  if (static_cast<int>(key.u11.size()) != K || static_cast<int>(key.u00.size()) != K ||
      static_cast<int>(key.u10.size()) != K) {
    throw ValidationError("representative key does not match the number of strata");
  }
  std::vector<StratumPotential> strata(K);
  std::vector<IntRange> ranges(K);
  std::int64_t lo_sum = 0;
  std::int64_t hi_sum = 0;
  for (int k = 0; k < K; ++k) {
    const auto& s = obs[k];
    const int n = s.total();
    const auto range = effect_bounds(s, key.u11[k], key.u00[k]);
    if (!range) return std::nullopt;
    if (obs.design()[k].balanced()) {
      ranges[k] = *range;
      lo_sum += range->lo;
      hi_sum += range->hi;
    } else {
      const StratumPotential v{key.u11[k], key.u10[k], n - key.u11[k] - key.u00[k] - key.u10[k],
                               key.u00[k]};
      if (v.v10 < 0 || !is_compatible(v, s)) return std::nullopt;
      strata[k] = v;
    }
  }
  // Every balanced effect has the parity of its free mass, so a must match
  // the parity of the summed lower bounds.
  if (key.a < lo_sum || key.a > hi_sum || ((key.a - lo_sum) & 1) != 0) return std::nullopt;
  std::int64_t remaining = key.a - lo_sum;
  for (int k = 0; k < K; ++k) {
    if (!obs.design()[k].balanced()) continue;
    const auto& s = obs[k];
    const int step = static_cast<int>(std::min<std::int64_t>(remaining, ranges[k].hi - ranges[k].lo));
    remaining -= step;
    const int d = ranges[k].lo + step;
    const int free_mass = s.total() - key.u11[k] - key.u00[k];
    strata[k] = {key.u11[k], (free_mass + d) / 2, (free_mass - d) / 2, key.u00[k]};
  }
  return PotentialTable(std::move(strata));
}

}  // namespace stratexact
