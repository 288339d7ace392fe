#pragma once

// Input documents, configuration files and result serialization.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stratexact/harness.hpp"
#include "stratexact/methods.hpp"

namespace stratexact {

/// One stratum of an input file. Totals are arm sizes and include subjects
/// whose outcome is missing.
struct InputStratum {
  std::string label;
  int treated_responders = 0;
  int treated_total = 0;
  int control_responders = 0;
  int control_total = 0;
  int treated_missing = 0;
  int control_missing = 0;

  friend bool operator==(const InputStratum&, const InputStratum&) = default;
};

struct InputDocument {
  std::vector<InputStratum> strata;

  bool has_missing() const;
  /// Throws ValidationError naming the stratum and field on a violation.
  void validate() const;
  std::vector<StratumWithMissing> to_strata() const;
  /// Observed table; requires no missing outcomes.
  OutcomeTable table() const;
  static InputDocument from_table(const OutcomeTable& obs);

  friend bool operator==(const InputDocument&, const InputDocument&) = default;
};

enum class InputFormat { Json, Csv };

/// Parses and validates. Malformed CSV rows report their line number.
InputDocument parse_input(std::istream& in, InputFormat format);
InputDocument parse_input(const std::string& text, InputFormat format);
/// Format from the extension (.csv, else JSON) unless given.
InputDocument parse_input_file(const std::string& path,
                               std::optional<InputFormat> format = std::nullopt);

std::string serialize_input(const InputDocument& doc, InputFormat format);

Method parse_method(const std::string& name);
StatisticKind parse_statistic(const std::string& name);
Combiner parse_combiner(const std::string& name);
Target parse_target(const std::string& name);

/// Extra fields echoed into result documents.
struct ResultContext {
  int replicates = 0;
  std::uint64_t seed = 0;
  bool include_timing = true;
};

/// A method that stopped on its work budget.
struct MethodFailure {
  std::string method;
  std::string reason;
};

std::string result_to_json(const ConfidenceResult& r, const ResultContext& ctx);
/// A single result without failures is written as one object, otherwise as
/// {"results": [...]} with a status entry per failed method.
std::string results_to_json(const std::vector<ConfidenceResult>& rs, const ResultContext& ctx,
                            const std::vector<MethodFailure>& failures = {});
std::string results_to_csv(const std::vector<ConfidenceResult>& rs, const ResultContext& ctx,
                           const std::vector<MethodFailure>& failures = {});

/// Scenario from a JSON config: either explicit "v" and "m", or a built-in
/// "table" (1 or 2) and 1-based "row". Optional reps, R, level, methods,
/// seed, stat, combiner, budget, ws_cap, threads, name.
Scenario parse_scenario(const std::string& json_text);
/// Sweep from a JSON config: "n" (per-stratum sizes) and "taus" (tuples),
/// optional reps, R, level, methods, seed, budget, ws_cap, threads.
SweepConfig parse_sweep(const std::string& json_text);

std::string scenario_to_json(const Scenario& s, const ScenarioResult& r, bool include_records);
std::string scenario_to_csv(const ScenarioResult& r);
/// Columns n,method,mean_width,taus.
std::string sweep_to_csv(const std::vector<SweepRecord>& records);
std::string case_study_to_json(const CaseStudyReport& report, int replicates, std::uint64_t seed);
std::string case_study_to_csv(const CaseStudyReport& report);

std::string read_file(const std::string& path);

}  // namespace stratexact
