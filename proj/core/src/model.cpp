#include "stratexact/model.hpp"

#include <numeric>
#include <string>

#include "stratexact/errors.hpp"

namespace stratexact {

Design::Design(std::vector<StratumSize> strata) : strata_(std::move(strata)) {
  if (strata_.empty()) throw ValidationError("design has no strata");
  for (std::size_t k = 0; k < strata_.size(); ++k) {
    const auto& s = strata_[k];
    if (s.m <= 0 || s.m >= s.n) {
      throw ValidationError("stratum " + std::to_string(k + 1) +
                            ": both arms must be non-empty (n=" + std::to_string(s.n) +
                            ", m=" + std::to_string(s.m) + ")");
    }
    if (s.n > 65535) {
      throw ValidationError("stratum " + std::to_string(k + 1) + ": more than 65535 subjects");
    }
  }
}

int Design::n() const {
  return std::accumulate(strata_.begin(), strata_.end(), 0,
                         [](int acc, const StratumSize& s) { return acc + s.n; });
}

int Design::m() const {
  return std::accumulate(strata_.begin(), strata_.end(), 0,
                         [](int acc, const StratumSize& s) { return acc + s.m; });
}

int Design::balanced_count() const {
  int count = 0;
  for (const auto& s : strata_) count += s.balanced() ? 1 : 0;
  return count;
}

namespace {

std::vector<StratumSize> design_of(const std::vector<StratumOutcome>& strata) {
  std::vector<StratumSize> sizes;
  sizes.reserve(strata.size());
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const auto& s = strata[k];
    if (s.n11 < 0 || s.n10 < 0 || s.n01 < 0 || s.n00 < 0) {
      throw ValidationError("stratum " + std::to_string(k + 1) + ": negative count");
    }
    sizes.push_back({s.total(), s.treated()});
  }
  return sizes;
}

}  // namespace

OutcomeTable::OutcomeTable(std::vector<StratumOutcome> strata)
    : design_(design_of(strata)), strata_(std::move(strata)) {}

PotentialTable::PotentialTable(std::vector<StratumPotential> strata)
    : strata_(std::move(strata)) {
  for (std::size_t k = 0; k < strata_.size(); ++k) {
    const auto& s = strata_[k];
    if (s.v11 < 0 || s.v10 < 0 || s.v01 < 0 || s.v00 < 0) {
      throw ValidationError("potential table stratum " + std::to_string(k + 1) +
                            ": negative count");
    }
  }
}

int PotentialTable::n() const {
  int total = 0;
  for (const auto& s : strata_) total += s.total();
  return total;
}

int PotentialTable::treated_ones() const {
  int total = 0;
  for (const auto& s : strata_) total += s.treated_ones();
  return total;
}

int PotentialTable::control_ones() const {
  int total = 0;
  for (const auto& s : strata_) total += s.control_ones();
  return total;
}

void PotentialTable::check_against(const Design& design) const {
  if (strata() != design.strata()) {
    throw ValidationError("potential table has " + std::to_string(strata()) +
                          " strata, design has " + std::to_string(design.strata()));
  }
  for (int k = 0; k < strata(); ++k) {
    if (strata_[k].total() != design[k].n) {
      throw ValidationError("potential table stratum " + std::to_string(k + 1) + " sums to " +
                            std::to_string(strata_[k].total()) + ", expected " +
                            std::to_string(design[k].n));
    }
  }
}

TauValue tau(const PotentialTable& v) {
  std::int64_t numerator = 0;
  for (const auto& s : v.counts()) numerator += s.effect();
  return {numerator, v.n()};
}

double tau_hat_stratum(const StratumOutcome& obs) {
  return static_cast<double>(obs.n11) / obs.treated() -
         static_cast<double>(obs.n01) / obs.control();
}

double tau_hat(const OutcomeTable& obs) {
  double sum = 0.0;
  for (int k = 0; k < obs.strata(); ++k) {
    sum += obs.design()[k].n * tau_hat_stratum(obs[k]);
  }
  return sum / obs.design().n();
}

PotentialTable no_effect_completion(const OutcomeTable& obs) {
  std::vector<StratumPotential> strata;
  strata.reserve(obs.strata());
  for (const auto& s : obs.counts()) strata.push_back({s.ones(), 0, 0, s.zeros()});
  return PotentialTable(std::move(strata));
}

}  // namespace stratexact
