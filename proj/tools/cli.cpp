#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "stratexact/errors.hpp"
#include "stratexact/harness.hpp"
#include "stratexact/io.hpp"
#include "stratexact/methods.hpp"

namespace stratexact::cli {
namespace {

const std::vector<std::string> kMethodNames{"wald", "ws", "esi", "spt", "cpt", "all"};
const std::vector<std::string> kStatNames{"absdiff", "studentized", "sterne"};
const std::vector<std::string> kCombinerNames{"fisher", "tippett", "pearson", "george", "stouffer"};

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string output = "json";
  bool no_timing = false;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& err) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << s << '\n';
  return s;
}

std::int64_t resolve_budget(std::int64_t flag) {
  const char* env = std::getenv("STRAT_EXACT_BUDGET");
  if (env == nullptr || *env == '\0') return flag;
  std::int64_t value = 0;
  const std::string text(env);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value <= 0) {
    throw ValidationError("STRAT_EXACT_BUDGET must be a positive integer, got '" + text + "'");
  }
  return value;
}

void add_common(CLI::App* cmd, Common& c, bool with_output) {
  cmd->add_option("--seed", c.seed, "Random seed; sampled and printed when omitted");
  cmd->add_option("--threads", c.threads, "Worker threads (0 uses every core)")
      ->check(CLI::NonNegativeNumber);
  if (with_output) {
    cmd->add_option("--output", c.output, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
  }
}

bool config_has_seed(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  return j.is_object() && j.contains("seed");
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact confidence intervals for the average treatment effect in stratified "
               "experiments with binary outcomes",
               "stratexact"};
  app.require_subcommand(1);

  Common common;

  auto* analyze = app.add_subcommand("analyze", "Confidence interval for one input table");
  std::string input;
  std::string input_format;
  std::string method = "spt";
  double level = 0.95;
  int reps = 1000;
  std::string stat = "absdiff";
  std::string combiner = "fisher";
  std::string target = "ate";
  std::int64_t budget = kDefaultBudget;
  double ws_cap = kDefaultWsCap;
  analyze->add_option("--input", input, "Input file (.csv or .json)")->required();
  analyze->add_option("--format", input_format, "Input format, default from the extension")
      ->check(CLI::IsMember({"json", "csv"}));
  analyze->add_option("--method", method, "Method")->check(CLI::IsMember(kMethodNames));
  analyze->add_option("--level", level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--reps", reps, "Random allocations per permutation test")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--stat", stat, "Test statistic")->check(CLI::IsMember(kStatNames));
  analyze->add_option("--combiner", combiner, "CPT combining function")
      ->check(CLI::IsMember(kCombinerNames));
  analyze->add_option("--target", target, "Estimand")->check(CLI::IsMember({"ate", "rr"}));
  analyze->add_option("--budget", budget, "SPT/CPT work budget (STRAT_EXACT_BUDGET overrides)")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--ws-cap", ws_cap, "Largest W-S composition count")
      ->check(CLI::PositiveNumber);
  analyze->add_flag("--no-timing", common.no_timing, "Omit runtime_ms from the output");
  add_common(analyze, common, true);

  auto* simulate = app.add_subcommand("simulate", "Coverage and width study for one scenario");
  std::string config;
  bool records = false;
  simulate->add_option("--config", config, "Scenario JSON")->required();
  simulate->add_flag("--records", records, "Include per-rep records in JSON output");
  add_common(simulate, common, true);

  auto* case_cmd = app.add_subcommand("case-study", "Vedolizumab trial, all five methods");
  int case_reps = 1000;
  case_cmd->add_option("--reps", case_reps, "Random allocations per permutation test")
      ->check(CLI::PositiveNumber);
  add_common(case_cmd, common, true);

  auto* sweep = app.add_subcommand("sweep", "Mean widths over balanced two-arm designs");
  std::string plot_path;
  sweep->add_option("--config", config, "Sweep JSON")->required();
  sweep->add_option("--emit-plot-data", plot_path, "CSV of n,method,mean_width,taus")
      ->required();
  add_common(sweep, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (analyze->parsed()) {
      const auto doc = parse_input_file(
          input, input_format.empty() ? std::nullopt
                                      : std::optional<InputFormat>(input_format == "csv"
                                                                       ? InputFormat::Csv
                                                                       : InputFormat::Json));
      const auto strata = doc.to_strata();
      MethodRequest req;
      req.target = parse_target(target);
      req.level = level;
      req.replicates = reps;
      req.seed = resolve_seed(common.seed, err);
      req.stat = parse_statistic(stat);
      req.combiner = parse_combiner(combiner);
      req.budget = resolve_budget(budget);
      req.ws_cap = ws_cap;
      req.threads = resolve_threads(common.threads);

      std::vector<Method> methods;
      if (method == "all") {
        methods = req.target == Target::RR
                      ? std::vector<Method>{Method::WS, Method::ESI, Method::SPT}
                      : kAllMethods;
      } else {
        methods.push_back(parse_method(method));
      }
      std::vector<ConfidenceResult> results;
      std::vector<MethodFailure> failures;
      for (Method m : methods) {
        req.method = m;
        if (methods.size() == 1) {
          results.push_back(run_method(strata, req));
          continue;
        }
        try {
          results.push_back(run_method(strata, req));
        } catch (const IntractableError& e) {
          failures.push_back({to_string(m), e.what()});
        }
      }
      const ResultContext ctx{req.replicates, req.seed, !common.no_timing};
      out << (common.output == "csv" ? results_to_csv(results, ctx, failures)
                                     : results_to_json(results, ctx, failures));
      if (!failures.empty()) {
        for (const auto& f : failures) err << f.method << ": " << f.reason << '\n';
        return kExitIntractable;
      }
      return kExitOk;
    }

    if (simulate->parsed()) {
      const std::string text = read_file(config);
      auto scenario = parse_scenario(text);
      if (common.seed) {
        scenario.seed = *common.seed;
      } else if (!config_has_seed(text)) {
        scenario.seed = resolve_seed(std::nullopt, err);
      }
      if (common.threads > 0) scenario.threads = common.threads;
      scenario.budget = resolve_budget(scenario.budget);
      const auto result = run_scenario(scenario);
      out << (common.output == "csv" ? scenario_to_csv(result)
                                     : scenario_to_json(scenario, result, records));
      return kExitOk;
    }

    if (case_cmd->parsed()) {
      const std::uint64_t seed = resolve_seed(common.seed, err);
      const auto report = case_study(case_reps, seed, resolve_threads(common.threads));
      out << (common.output == "csv" ? case_study_to_csv(report)
                                     : case_study_to_json(report, case_reps, seed));
      return kExitOk;
    }

    if (sweep->parsed()) {
      const std::string text = read_file(config);
      auto cfg = parse_sweep(text);
      if (common.seed) {
        cfg.seed = *common.seed;
      } else if (!config_has_seed(text)) {
        cfg.seed = resolve_seed(std::nullopt, err);
      }
      if (common.threads > 0) cfg.threads = common.threads;
      cfg.budget = resolve_budget(cfg.budget);
      const auto csv = sweep_to_csv(run_balanced_sweep(cfg));
      std::ofstream file(plot_path, std::ios::binary);
      if (!file) throw ValidationError("cannot write '" + plot_path + "'");
      file << csv;
      out << csv;
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IntractableError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIntractable;
  }
  return kExitValidation;
}

}  // namespace stratexact::cli
