#pragma once

// Joint test-inversion sweep over potential-outcome tables.

#include <cstdint>
#include <optional>
#include <vector>

#include "stratexact/model.hpp"
#include "stratexact/randomization.hpp"

namespace stratexact::detail {

struct EngineOptions {
  double alpha = 0.05;
  StatisticKind stat = StatisticKind::AbsDiff;
  bool reduced = true;  // class representatives for balanced strata
  bool memo = true;
  bool track_rr = false;
  int threads = 1;
  std::int64_t budget = 100'000'000;
};

/// Non-negative fraction, normalized; 0/0 marks an undefined ratio.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
  friend auto operator<=>(const Ratio&, const Ratio&) = default;
};

struct EngineResult {
  std::vector<std::int64_t> accepted;  // effect numerators over n, ascending
  std::int64_t tables_tested = 0;
  std::optional<PotentialTable> lo_witness;
  std::optional<PotentialTable> hi_witness;
  std::vector<Ratio> accepted_rr;  // ascending by value, 0/0 last
  bool reduced_path = false;
};

/// Upper estimate of the tables the sweep may test.
double estimate_spt_tables(const OutcomeTable& obs, bool reduced);

EngineResult run_spt_engine(const OutcomeTable& obs, const AllocationSet& alloc,
                            const EngineOptions& options);

}  // namespace stratexact::detail
