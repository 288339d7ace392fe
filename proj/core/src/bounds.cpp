#include "stratexact/bounds.hpp"

#include <algorithm>
#include <string>

#include "stratexact/errors.hpp"

namespace stratexact {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("confidence level must lie in (0, 1), got " + std::to_string(level));
  }
}

// pmf[g][x] for X ~ Hypergeo(population, g, draws), g = 0..population.
std::vector<std::vector<double>> pmf_table(int population, int draws) {
  std::vector<std::vector<double>> table(population + 1, std::vector<double>(draws + 1));
  for (int g = 0; g <= population; ++g) {
    for (int x = 0; x <= draws; ++x) table[g][x] = hypergeom_pmf(x, {population, g, draws});
  }
  return table;
}

class WsSearch {
 public:
  WsSearch(const std::vector<int>& observed, const std::vector<int>& population,
           const std::vector<int>& draws)
      : population_(population), draws_(draws), K_(static_cast<int>(population.size())) {
    for (int x : observed) s_obs_ += x;
    int total = 0;
    for (int k = 0; k < K_; ++k) {
      pmf_.push_back(pmf_table(population[k], draws[k]));
      total += population[k];
    }
    const int last = K_ - 1;
    const int dl = draws[last];
    upper_tail_.assign(population[last] + 1, std::vector<double>(dl + 2, 0.0));
    lower_tail_.assign(population[last] + 1, std::vector<double>(dl + 1, 0.0));
    for (int g = 0; g <= population[last]; ++g) {
      for (int y = dl; y >= 0; --y) upper_tail_[g][y] = upper_tail_[g][y + 1] + pmf_[last][g][y];
      double acc = 0.0;
      for (int y = 0; y <= dl; ++y) {
        acc += pmf_[last][g][y];
        lower_tail_[g][y] = acc;
      }
    }
    max_upper_.assign(total + 1, 0.0);
    max_lower_.assign(total + 1, 0.0);
  }

  void run() {
    std::vector<double> start{1.0};
    descend(0, 0, start);
  }

  const std::vector<double>& max_upper() const { return max_upper_; }
  const std::vector<double>& max_lower() const { return max_lower_; }

 private:
  void descend(int k, int t, const std::vector<double>& dist) {
    if (k == K_ - 1) {
      leaf(t, dist);
      return;
    }
    std::vector<double> next(dist.size() + draws_[k]);
    for (int g = 0; g <= population_[k]; ++g) {
      std::fill(next.begin(), next.end(), 0.0);
      const auto& p = pmf_[k][g];
      for (std::size_t s = 0; s < dist.size(); ++s) {
        if (dist[s] == 0.0) continue;
        for (int x = 0; x <= draws_[k]; ++x) next[s + x] += dist[s] * p[x];
      }
      descend(k + 1, t + g, next);
    }
  }

  void leaf(int t, const std::vector<double>& dist) {
    const int last = K_ - 1;
    const int dl = draws_[last];
    for (int g = 0; g <= population_[last]; ++g) {
      double upper = 0.0;
      double lower = 0.0;
      for (std::size_t s = 0; s < dist.size(); ++s) {
        if (dist[s] == 0.0) continue;
        const int y = s_obs_ - static_cast<int>(s);
        // P(X_last >= y) and P(X_last <= y).
        const double up = y <= 0 ? 1.0 : (y > dl ? 0.0 : upper_tail_[g][y]);
        const double lo = y < 0 ? 0.0 : (y >= dl ? 1.0 : lower_tail_[g][y]);
        upper += dist[s] * up;
        lower += dist[s] * lo;
      }
      max_upper_[t + g] = std::max(max_upper_[t + g], std::min(upper, 1.0));
      max_lower_[t + g] = std::max(max_lower_[t + g], std::min(lower, 1.0));
    }
  }

  std::vector<int> population_;
  std::vector<int> draws_;
  int K_;
  int s_obs_ = 0;
  std::vector<std::vector<std::vector<double>>> pmf_;
  std::vector<std::vector<double>> upper_tail_;
  std::vector<std::vector<double>> lower_tail_;
  std::vector<double> max_upper_;
  std::vector<double> max_lower_;
};

}  // namespace

IntRange ws_total_interval(const std::vector<int>& observed, const std::vector<int>& population,
                           const std::vector<int>& draws, double alpha_side, double cap) {
  const std::size_t K = population.size();
  if (K == 0 || observed.size() != K || draws.size() != K) {
    throw ValidationError("W-S bound needs matching, non-empty per-stratum inputs");
  }
  double compositions = 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (observed[k] < 0 || observed[k] > draws[k] || draws[k] > population[k]) {
      throw ValidationError("W-S bound stratum " + std::to_string(k + 1) +
                            ": needs 0 <= observed <= draws <= population");
    }
    compositions *= population[k] + 1.0;
  }
  if (compositions > cap) {
    throw IntractableError("W-S would scan " + std::to_string(static_cast<long long>(compositions)) +
                           " compositions, above the cap of " +
                           std::to_string(static_cast<long long>(cap)) + "; use ESI instead");
  }
  WsSearch search(observed, population, draws);
  search.run();
  const auto& up = search.max_upper();
  const auto& lo = search.max_lower();
  const int total = static_cast<int>(up.size()) - 1;
  IntRange out{0, total};
  for (int t = 0; t <= total; ++t) {
    if (up[t] > alpha_side) {
      out.lo = t;
      break;
    }
  }
  for (int t = total; t >= 0; --t) {
    if (lo[t] > alpha_side) {
      out.hi = t;
      break;
    }
  }
  return out;
}

ParameterBounds ws_parameter_bounds(const OutcomeTable& obs, double level, double cap) {
  check_level(level);
  std::vector<int> treated_obs;
  std::vector<int> control_obs;
  std::vector<int> population;
  std::vector<int> treated;
  std::vector<int> control;
  for (const auto& s : obs.counts()) {
    treated_obs.push_back(s.n11);
    control_obs.push_back(s.n01);
    population.push_back(s.total());
    treated.push_back(s.treated());
    control.push_back(s.control());
  }
  const double side = (1.0 - level) / 4.0;
  return {ws_total_interval(treated_obs, population, treated, side, cap),
          ws_total_interval(control_obs, population, control, side, cap)};
}

ParameterBounds esi_parameter_bounds(const OutcomeTable& obs, double level) {
  check_level(level);
  const double stratum_level = 1.0 - (1.0 - level) / (2.0 * obs.strata());
  ParameterBounds out{{0, 0}, {0, 0}};
  for (const auto& s : obs.counts()) {
    const auto t = hypergeom_param_ci(s.n11, s.total(), s.treated(), stratum_level);
    const auto c = hypergeom_param_ci(s.n01, s.total(), s.control(), stratum_level);
    out.treated_ones.lo += t.lo;
    out.treated_ones.hi += t.hi;
    out.control_ones.lo += c.lo;
    out.control_ones.hi += c.hi;
  }
  return out;
}

Interval ate_from_bounds(const ParameterBounds& b, int n) {
  return {static_cast<double>(b.treated_ones.lo - b.control_ones.hi) / n,
          static_cast<double>(b.treated_ones.hi - b.control_ones.lo) / n};
}

Interval single_stratum_bound_ci(const OutcomeTable& obs, double level) {
  if (obs.strata() != 1) throw ValidationError("single-stratum bound needs exactly one stratum");
  return esi_interval(obs, level);
}

Interval ws_interval(const OutcomeTable& obs, double level, double cap) {
  return ate_from_bounds(ws_parameter_bounds(obs, level, cap), obs.design().n());
}

Interval esi_interval(const OutcomeTable& obs, double level) {
  return ate_from_bounds(esi_parameter_bounds(obs, level), obs.design().n());
}

Interval rr_from_bounds(const ParameterBounds& b) {
  const double lo = b.treated_ones.lo == 0 ? 0.0
                    : b.control_ones.hi == 0
                        ? kInfinity
                        : static_cast<double>(b.treated_ones.lo) / b.control_ones.hi;
  const double hi = b.control_ones.lo == 0
                        ? kInfinity
                        : static_cast<double>(b.treated_ones.hi) / b.control_ones.lo;
  return {lo, hi};
}

Interval rr_bound_interval(const OutcomeTable& obs, double level, BoundSource source, double cap) {
  return rr_from_bounds(source == BoundSource::WS ? ws_parameter_bounds(obs, level, cap)
                                                  : esi_parameter_bounds(obs, level));
}

}  // namespace stratexact
