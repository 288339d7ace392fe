#include <benchmark/benchmark.h>

#include "stratexact/bounds.hpp"
#include "stratexact/harness.hpp"
#include "stratexact/methods.hpp"
#include "stratexact/randomization.hpp"

namespace {

using namespace stratexact;

void BM_GenerateAllocations(benchmark::State& state) {
  const Design design({{54, 29}, {48, 22}});
  const int R = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_allocations(design, R, 1));
  state.SetItemsProcessed(state.iterations() * R);
}
BENCHMARK(BM_GenerateAllocations)->Arg(100)->Arg(1000)->Arg(10000);

void BM_McPValue(benchmark::State& state) {
  const auto obs = case_study_table();
  const auto v = no_effect_completion(obs);
  const auto alloc = generate_allocations(obs.design(), static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(mc_pvalue(v, obs, alloc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_McPValue)->Arg(1000)->Arg(10000);

void BM_Wald(benchmark::State& state) {
  const auto obs = case_study_table();
  for (auto _ : state) benchmark::DoNotOptimize(wald_ci(obs, 0.95));
}
BENCHMARK(BM_Wald);

void BM_Esi(benchmark::State& state) {
  const auto obs = case_study_table();
  for (auto _ : state) benchmark::DoNotOptimize(esi_interval(obs, 0.95));
}
BENCHMARK(BM_Esi);

void BM_Ws(benchmark::State& state) {
  const auto obs = case_study_table();
  for (auto _ : state) benchmark::DoNotOptimize(ws_interval(obs, 0.95));
}
BENCHMARK(BM_Ws)->Unit(benchmark::kMillisecond);

void BM_SptCaseStudy(benchmark::State& state) {
  const auto obs = case_study_table();
  SptOptions opt;
  opt.replicates = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spt_ci(obs, 0.95, opt));
}
BENCHMARK(BM_SptCaseStudy)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_CptCaseStudy(benchmark::State& state) {
  const auto obs = case_study_table();
  CptOptions opt;
  opt.replicates = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cpt_ci(obs, 0.95, opt));
}
BENCHMARK(BM_CptCaseStudy)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

// Balanced strata: class-reduced sweep against the full enumeration.
void BM_SptBalanced(benchmark::State& state) {
  const OutcomeTable obs({{6, 4, 3, 7}, {5, 5, 4, 6}});
  const auto alloc = generate_allocations(obs.design(), 500, 1);
  SptOptions opt;
  opt.reduced = state.range(0) != 0;
  std::int64_t tested = 0;
  for (auto _ : state) tested = spt_ci(obs, 0.95, alloc, opt).tables_tested;
  state.counters["tables_tested"] = static_cast<double>(tested);
}
BENCHMARK(BM_SptBalanced)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
