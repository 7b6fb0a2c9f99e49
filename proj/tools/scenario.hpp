#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sflplan/optimizer.hpp"
#include "sflplan/types.hpp"

namespace sflplan::cli {

inline constexpr double kBitsPerMegabit = 1e6;
inline constexpr double kFlopsPerGiga = 1e9;

struct FmaxSweep {
  std::vector<double> values;         // FLOPs/s, positive ascending
  std::vector<double> values_gflops;  // as written in the file, for output
};

struct LayerSweep {
  std::string client;
  std::optional<double> f_server;  // FLOPs/s
};

/// A planning study: model profile, curves, clients and server. Files use
/// Mb/s and GFLOPs/s; everything here is already in bits/s and FLOPs/s.
struct Scenario {
  std::filesystem::path profile_path;
  std::optional<std::filesystem::path> timing_path;
  std::optional<FittedCurves> inline_curves;
  std::vector<ClientSpec> clients;
  ServerSpec server;
  optimizer::Options options;
  std::optional<FmaxSweep> sweep;
  std::optional<LayerSweep> layer_sweep;
};

/// Scenario with its profile loaded and curves fitted (or taken inline).
struct LoadedScenario {
  Scenario scenario;
  ModelProfile profile;
  FittedCurves curves;
};

/// Parses a scenario file; relative paths resolve against its directory.
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir);
LoadedScenario load_scenario(const std::filesystem::path& path);

nlohmann::ordered_json curves_to_json(const FittedCurves& curves);
FittedCurves curves_from_json(const nlohmann::json& j);

struct ScenarioSynthesis {
  std::uint64_t seed = 7;
  int candidates = 30;
  int selected = 10;
  double f_max_gflops = 3000.0;
  int epochs = 20;
  int batch = 32;
  std::string profile_ref = "../profiles/effnetv2_synthetic.json";
  std::string timing_ref = "../profiles/effnetv2_timing.json";
};

/// Heterogeneous candidate pool drawn from `seed`, of which `selected`
/// clients take part. Returns the scenario as file-ready JSON.
nlohmann::ordered_json synthesize_scenario_json(const ScenarioSynthesis& params);

/// Same clients as synthesize_scenario_json, in core units.
std::vector<ClientSpec> synthesize_clients(const ScenarioSynthesis& params, int layer_count);

}  // namespace sflplan::cli
