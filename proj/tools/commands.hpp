#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sflplan/optimizer.hpp"

namespace sflplan::cli {

// Stable exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitInconsistent = 4;

struct OptimizerOverrides {
  bool strict_paper_mode = false;
  std::optional<int> max_iters;
  std::optional<double> conv_tol;
};

struct FitArgs {
  std::filesystem::path profile;
  std::filesystem::path timing;
  std::filesystem::path out;
};

struct PlanArgs {
  std::filesystem::path scenario;
  std::filesystem::path out;
  std::optional<std::filesystem::path> csv;  // defaults to `out` with a .csv extension
  OptimizerOverrides overrides;
};

struct SimulateArgs {
  std::filesystem::path scenario;
  std::filesystem::path plan;
  std::filesystem::path out;
  std::optional<std::filesystem::path> summary;  // defaults to <out stem>.summary.csv
  int rounds = 1;
  bool expanded = false;
};

struct SweepArgs {
  std::filesystem::path scenario;
  std::filesystem::path out;
  bool layers = false;
  std::optional<std::string> client;            // layer mode; overrides the scenario
  std::optional<double> f_server_gflops;        // layer mode; overrides the scenario
  OptimizerOverrides overrides;
};

struct SynthArgs {
  std::string kind;  // profile, timing or scenario
  std::filesystem::path out;
  std::uint64_t seed = 7;
  double noise = 0.10;
  int layers = 59;
  std::size_t count = 1500;
  int candidates = 30;
  int selected = 10;
  double f_max_gflops = 3000.0;
};

// Each command reports progress on `out` and problems on `err`, and returns
// an exit code from the contract above. None of them throws.
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);
int cmd_plan(const PlanArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);

nlohmann::ordered_json plan_to_json(const optimizer::Plan& plan);
optimizer::Plan plan_from_json(const nlohmann::json& j);

}  // namespace sflplan::cli
