#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

using namespace stratexact::cli;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "stratexact");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "stratexact_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / name).string();
  std::ofstream(path) << content;
  return path;
}

std::string vedolizumab() {
  return temp_file("vedolizumab.csv",
                   "label,treated_responders,treated_total,control_responders,control_total\n"
                   "naive,8,29,3,25\n"
                   "failure,8,22,2,26\n");
}

}  // namespace

TEST(Cli, AnalyzeSeedIsDeterministic) {
  const auto in = vedolizumab();
  const std::vector<std::string> args{"analyze", "--input", in, "--method", "spt", "--reps", "200",
                                      "--seed", "7", "--no-timing", "--threads", "1"};
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = json::parse(a.out);
  EXPECT_EQ(j["method"], "spt");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["R"], 200);
}

TEST(Cli, MissingSeedIsPrinted) {
  const auto r = run({"analyze", "--input", vedolizumab(), "--method", "spt", "--reps", "50"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  ASSERT_EQ(r.err.rfind("seed: ", 0), 0u) << r.err;
  const auto seed = std::stoull(r.err.substr(6));
  EXPECT_EQ(json::parse(r.out)["seed"].get<std::uint64_t>(), seed);
}

TEST(Cli, ValidationErrorsExitTwo) {
  EXPECT_EQ(run({"analyze", "--input", vedolizumab(), "--bogus"}).code, kExitValidation);
  EXPECT_EQ(run({"analyze", "--input", vedolizumab(), "--method", "bayes"}).code, kExitValidation);
  EXPECT_EQ(run({"analyze", "--input", "/nonexistent/x.csv"}).code, kExitValidation);
  EXPECT_EQ(run({}).code, kExitValidation);
  const auto bad = temp_file("bad.csv",
                             "label,treated_responders,treated_total,control_responders,control_total\n"
                             "a,9,8,1,4\n");
  const auto r = run({"analyze", "--input", bad, "--method", "esi"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("stratum 1"), std::string::npos);
  const auto empty = temp_file("empty.csv", "");
  EXPECT_NE(run({"analyze", "--input", empty}).err.find("no strata"), std::string::npos);
}

TEST(Cli, LargeSptExitsThreeWithRecommendation) {
  std::string csv = "label,treated_responders,treated_total,control_responders,control_total\n";
  for (int k = 0; k < 5; ++k) csv += "s" + std::to_string(k) + ",10,20,7,20\n";
  const auto in = temp_file("large.csv", csv);
  const auto r = run({"analyze", "--input", in, "--method", "spt", "--seed", "1"});
  EXPECT_EQ(r.code, kExitIntractable);
  EXPECT_NE(r.err.find("ESI"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("CPT"), std::string::npos) << r.err;
}

TEST(Cli, EnvironmentBudgetOverrides) {
  const auto in = vedolizumab();
  ::setenv("STRAT_EXACT_BUDGET", "5", 1);
  const auto r = run({"analyze", "--input", in, "--method", "spt", "--seed", "1", "--reps", "20"});
  ::unsetenv("STRAT_EXACT_BUDGET");
  EXPECT_EQ(r.code, kExitIntractable);
  ::setenv("STRAT_EXACT_BUDGET", "abc", 1);
  const auto bad = run({"analyze", "--input", in, "--method", "spt", "--seed", "1"});
  ::unsetenv("STRAT_EXACT_BUDGET");
  EXPECT_EQ(bad.code, kExitValidation);
}

TEST(Cli, AllMethodsAndRelativeRisk) {
  const auto in = vedolizumab();
  const auto all = run({"analyze", "--input", in, "--method", "all", "--seed", "2", "--reps", "50"});
  ASSERT_EQ(all.code, kExitOk) << all.err;
  EXPECT_EQ(json::parse(all.out)["results"].size(), 5u);
  const auto rr = run({"analyze", "--input", in, "--method", "all", "--target", "rr", "--seed",
                       "2", "--reps", "50"});
  ASSERT_EQ(rr.code, kExitOk) << rr.err;
  const auto j = json::parse(rr.out)["results"];
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["method"], "ws-rr");
  const auto csv = run({"analyze", "--input", in, "--method", "esi", "--output", "csv"});
  EXPECT_EQ(csv.out.rfind("method,lo,hi", 0), 0u);
}

TEST(Cli, AllMethodsReportIntractableOnes) {
  const auto in = vedolizumab();
  const auto r = run({"analyze", "--input", in, "--method", "all", "--seed", "2", "--reps", "20",
                      "--budget", "3"});
  EXPECT_EQ(r.code, kExitIntractable);
  const auto j = json::parse(r.out)["results"];
  int failed = 0;
  for (const auto& e : j) failed += e.contains("status");
  EXPECT_GE(failed, 1);
  EXPECT_EQ(j.size(), 5u);
}

TEST(Cli, CaseStudyJson) {
  const auto r = run({"case-study", "--reps", "100", "--seed", "1", "--output", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = json::parse(r.out);
  int computed = 0;
  for (const auto& row : j["intervals"]) computed += row["interval"].is_array();
  EXPECT_EQ(computed, 5);
}

TEST(Cli, SimulateAndSweep) {
  const auto cfg = temp_file("scenario.json",
                             R"({"v": [[2,3,1,4],[1,2,2,3]], "m": [5,4], "reps": 3, "R": 30,
                                 "methods": ["wald", "esi"], "seed": 4})");
  const auto a = run({"simulate", "--config", cfg, "--threads", "1"});
  const auto b = run({"simulate", "--config", cfg, "--threads", "2"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_TRUE(a.err.empty());
  const auto ja = json::parse(a.out);
  const auto jb = json::parse(b.out);
  EXPECT_EQ(ja["allocations"], "redrawn per rep");
  EXPECT_EQ(ja["methods"][1]["mean_width"], jb["methods"][1]["mean_width"]);

  const auto sweep_cfg = temp_file("sweep.json",
                                   R"({"n": [4], "taus": [[0, 0.5]], "reps": 2, "R": 20,
                                       "methods": ["esi"], "seed": 1})");
  const auto plot = (std::filesystem::temp_directory_path() / "stratexact_cli_test" / "plot.csv").string();
  const auto s = run({"sweep", "--config", sweep_cfg, "--emit-plot-data", plot});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  std::ifstream f(plot);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "n,method,mean_width,taus");
}
