#include <benchmark/benchmark.h>

#include <filesystem>

#include "scenario.hpp"
#include "sflplan/alloc.hpp"
#include "sflplan/cutlayer.hpp"
#include "sflplan/optimizer.hpp"
#include "sflplan/profile.hpp"

namespace {

using namespace sflplan;

const cli::LoadedScenario& fig7() {
  static const auto ls = cli::load_scenario(std::filesystem::path(SFLPLAN_SOURCE_DIR) /
                                            "scenarios" / "fig7_ten_clients.json");
  return ls;
}

void BM_SelectCutLayer(benchmark::State& state) {
  const auto& ls = fig7();
  const auto& c = ls.scenario.clients.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cutlayer::select_cut_layer(c, ls.scenario.server.f_max / 10, ls.curves, ls.profile));
  }
}
BENCHMARK(BM_SelectCutLayer);

void BM_Allocate(benchmark::State& state) {
  const auto& ls = fig7();
  const auto& clients = ls.scenario.clients;
  std::vector<int> cuts(clients.size(), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        alloc::allocate(clients, cuts, ls.curves, ls.profile, ls.scenario.server));
  }
}
BENCHMARK(BM_Allocate);

void BM_OptimizeFig7(benchmark::State& state) {
  const auto& ls = fig7();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        optimizer::optimize(ls.scenario.clients, ls.curves, ls.profile, ls.scenario.server));
  }
}
BENCHMARK(BM_OptimizeFig7);

void BM_OptimizeScaling(benchmark::State& state) {
  const auto& ls = fig7();
  cli::ScenarioSynthesis sy;
  sy.candidates = static_cast<int>(state.range(0));
  sy.selected = sy.candidates;
  const auto clients = cli::synthesize_clients(sy, ls.profile.layer_count);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        optimizer::optimize(clients, ls.curves, ls.profile, ls.scenario.server));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OptimizeScaling)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_FitCurves(benchmark::State& state) {
  const std::filesystem::path dir = std::filesystem::path(SFLPLAN_SOURCE_DIR) / "profiles";
  const auto prof = profile::load_profile(dir / "effnetv2_synthetic.json");
  const auto timing = profile::load_timing(dir / "effnetv2_timing.json");
  for (auto _ : state) benchmark::DoNotOptimize(profile::fit_curves(prof, timing));
}
BENCHMARK(BM_FitCurves);

}  // namespace

BENCHMARK_MAIN();
