#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sflplan/error.hpp"
#include "sflplan/profile.hpp"

namespace sflplan::cli {
namespace {

using nlohmann::json;

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": field \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return require<T>(j, key, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo * std::pow(hi / lo, uniform(rng));
}

// Rounded to three decimals so files stay readable; the rounded values
// are what the scenario means.
double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

nlohmann::ordered_json curves_to_json(const FittedCurves& c) {
  nlohmann::ordered_json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["kappa"] = c.kappa;
  j["gamma1"] = c.gamma1;
  j["gamma2"] = c.gamma2;
  j["r2_size"] = c.r2_size;
  j["r2_flops"] = c.r2_flops;
  j["r2_smashed"] = c.r2_smashed;
  return j;
}

FittedCurves curves_from_json(const nlohmann::json& j) {
  const std::string where = "curves";
  FittedCurves c;
  c.alpha = require<double>(j, "alpha", where);
  c.beta = require<double>(j, "beta", where);
  c.kappa = require<double>(j, "kappa", where);
  c.gamma1 = require<double>(j, "gamma1", where);
  c.gamma2 = require<double>(j, "gamma2", where);
  c.r2_size = optional_field<double>(j, "r2_size", 1.0, where);
  c.r2_flops = optional_field<double>(j, "r2_flops", 1.0, where);
  c.r2_smashed = optional_field<double>(j, "r2_smashed", 1.0, where);
  c.validate();
  return c;
}

Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
  Scenario s;
  s.profile_path = resolve(base_dir, require<std::string>(j, "profile", "scenario"));
  if (j.contains("timing")) {
    s.timing_path = resolve(base_dir, require<std::string>(j, "timing", "scenario"));
  }
  if (j.contains("curves")) s.inline_curves = curves_from_json(j.at("curves"));
  if (!s.timing_path && !s.inline_curves) {
    throw ValidationError("scenario: needs either \"timing\" or inline \"curves\"");
  }

  const json& server = j.contains("server") ? j.at("server") : json::object();
  s.server.f_max = require<double>(server, "f_max_gflops", "server") * kFlopsPerGiga;
  s.server.validate();

  if (!j.contains("clients") || !j.at("clients").is_array() || j.at("clients").empty()) {
    throw ValidationError("scenario: \"clients\" must be a non-empty array");
  }
  std::set<std::string> seen;
  for (const auto& cj : j.at("clients")) {
    ClientSpec c;
    c.id = require<std::string>(cj, "id", "client");
    const std::string where = "client " + c.id;
    if (!seen.insert(c.id).second) throw ValidationError("duplicate client id " + c.id);
    c.f_local = require<double>(cj, "f_local_gflops", where) * kFlopsPerGiga;
    c.rate = require<double>(cj, "rate_mbps", where) * kBitsPerMegabit;
    c.batch = optional_field<int>(cj, "batch", 32, where);
    c.epochs = optional_field<int>(cj, "epochs", 20, where);
    c.dataset_size = optional_field<int>(cj, "dataset_size", 1, where);
    c.l_min = optional_field<int>(cj, "l_min", 1, where);
    s.clients.push_back(std::move(c));
  }

  if (j.contains("options")) {
    const json& o = j.at("options");
    s.options.max_iters = optional_field<int>(o, "max_iters", s.options.max_iters, "options");
    s.options.conv_tol = optional_field<double>(o, "conv_tol", s.options.conv_tol, "options");
    s.options.strict_paper_mode =
        optional_field<bool>(o, "strict_paper_mode", s.options.strict_paper_mode, "options");
  }
  if (s.options.max_iters < 1 || !(s.options.conv_tol > 0.0)) {
    throw ValidationError("options: max_iters and conv_tol must be positive");
  }

  if (j.contains("sweep")) {
    const json& sw = j.at("sweep");
    const auto parameter = optional_field<std::string>(sw, "parameter", "f_max", "sweep");
    if (parameter != "f_max") throw ValidationError("sweep: only parameter \"f_max\" is supported");
    FmaxSweep sweep;
    for (double v : require<std::vector<double>>(sw, "values_gflops", "sweep")) {
      sweep.values.push_back(v * kFlopsPerGiga);
      sweep.values_gflops.push_back(v);
    }
    if (sweep.values.empty()) throw ValidationError("sweep: no values");
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
      if (!(sweep.values[i] > 0.0) || !std::isfinite(sweep.values[i])) {
        throw ValidationError("sweep: values must be positive");
      }
      if (i > 0 && !(sweep.values[i] > sweep.values[i - 1])) {
        throw ValidationError("sweep: values must be ascending");
      }
    }
    s.sweep = std::move(sweep);
  }

  if (j.contains("layer_sweep")) {
    const json& ls = j.at("layer_sweep");
    LayerSweep sweep;
    sweep.client = require<std::string>(ls, "client", "layer_sweep");
    if (!seen.count(sweep.client)) {
      throw ValidationError("layer_sweep: unknown client " + sweep.client);
    }
    if (ls.contains("f_server_gflops")) {
      sweep.f_server = require<double>(ls, "f_server_gflops", "layer_sweep") * kFlopsPerGiga;
      if (!(*sweep.f_server > 0.0)) throw ValidationError("layer_sweep: f_server must be positive");
    }
    s.layer_sweep = std::move(sweep);
  }
  return s;
}

LoadedScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte), e.byte);
  }

  LoadedScenario out;
  out.scenario = parse_scenario(j, path.parent_path());
  out.profile = profile::load_profile(out.scenario.profile_path);
  if (out.scenario.inline_curves) {
    out.curves = *out.scenario.inline_curves;
  } else {
    out.curves = profile::fit_curves(out.profile, profile::load_timing(*out.scenario.timing_path));
  }
  for (const auto& c : out.scenario.clients) c.validate(out.profile.layer_count);
  return out;
}

namespace {

struct Draw {
  int index = 0;
  double f_local_gflops = 0.0;
  double rate_mbps = 0.0;
  int dataset_size = 0;
};

std::vector<Draw> draw_candidates(const ScenarioSynthesis& params) {
  if (params.candidates < 1 || params.selected < 1 || params.selected > params.candidates) {
    throw ValidationError("synthesis: need 1 <= selected <= candidates");
  }
  std::mt19937_64 rng(params.seed);
  std::vector<Draw> pool;
  for (int i = 0; i < params.candidates; ++i) {
    // Draw order is part of the format: compute, rate, dataset size.
    Draw d;
    d.index = i + 1;
    d.f_local_gflops = round3(log_uniform(rng, 30.0, 300.0));
    d.rate_mbps = round3(log_uniform(rng, 2.0, 20.0));
    d.dataset_size = 361 + static_cast<int>(uniform(rng) * (3578 - 361 + 1));
    pool.push_back(d);
  }
  // Partial Fisher-Yates picks the participating clients.
  for (int i = 0; i < params.selected; ++i) {
    const auto span = static_cast<std::uint64_t>(params.candidates - i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % span);
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(params.selected));
  std::sort(pool.begin(), pool.end(), [](const Draw& a, const Draw& b) { return a.index < b.index; });
  return pool;
}

}  // namespace

std::vector<ClientSpec> synthesize_clients(const ScenarioSynthesis& params, int layer_count) {
  std::vector<ClientSpec> out;
  for (const auto& d : draw_candidates(params)) {
    ClientSpec c;
    c.id = "c" + std::to_string(d.index);
    c.f_local = d.f_local_gflops * kFlopsPerGiga;
    c.rate = d.rate_mbps * kBitsPerMegabit;
    c.dataset_size = d.dataset_size;
    c.batch = params.batch;
    c.epochs = params.epochs;
    c.l_min = 1;
    c.validate(layer_count);
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::ordered_json synthesize_scenario_json(const ScenarioSynthesis& params) {
  nlohmann::ordered_json j;
  j["profile"] = params.profile_ref;
  j["timing"] = params.timing_ref;
  j["server"]["f_max_gflops"] = params.f_max_gflops;
  nlohmann::ordered_json clients = nlohmann::ordered_json::array();
  for (const auto& d : draw_candidates(params)) {
    nlohmann::ordered_json cj;
    cj["id"] = "c" + std::to_string(d.index);
    cj["f_local_gflops"] = d.f_local_gflops;
    cj["rate_mbps"] = d.rate_mbps;
    cj["batch"] = params.batch;
    cj["epochs"] = params.epochs;
    cj["dataset_size"] = d.dataset_size;
    cj["l_min"] = 1;
    clients.push_back(std::move(cj));
  }
  j["clients"] = std::move(clients);
  j["options"]["max_iters"] = 20;
  j["options"]["conv_tol"] = 1e-6;
  j["options"]["strict_paper_mode"] = false;
  return j;
}

}  // namespace sflplan::cli
