#pragma once

// Shared fixtures for the unit and acceptance tests: seeded random
// instances and the bundled data files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sflplan/types.hpp"

namespace sflplan::testing {

inline std::filesystem::path source_dir() { return SFLPLAN_SOURCE_DIR; }
inline std::filesystem::path bundled_profile() {
  return source_dir() / "profiles" / "effnetv2_synthetic.json";
}
inline std::filesystem::path bundled_timing() {
  return source_dir() / "profiles" / "effnetv2_timing.json";
}
inline std::filesystem::path fig6_scenario() {
  return source_dir() / "scenarios" / "fig6_single_client.json";
}
inline std::filesystem::path fig7_scenario() {
  return source_dir() / "scenarios" / "fig7_ten_clients.json";
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, uniform()); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool chance(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

/// Profile that follows the curves exactly. `flops_factor` scales the
/// whole-model FLOPs away from beta (1 + kappa) L so the local branch is not
/// simply the split branch's continuation.
inline ModelProfile profile_from_curves(const FittedCurves& c, int L, double flops_factor = 1.0) {
  ModelProfile p;
  p.layer_count = L;
  for (int l = 1; l <= L; ++l) {
    p.client_model_bits.push_back(c.alpha * l * l);
    p.client_flops_fwd.push_back(c.beta * l);
    p.smashed_bits.push_back(l == L ? 0.0 : c.gamma1 / (l + c.gamma2));
  }
  p.total_model_bits = p.client_model_bits.back();
  p.total_flops = c.beta * (1.0 + c.kappa) * L * flops_factor;
  return p;
}

/// Curves centred on the bundled EfficientNetV2-like shape, each parameter
/// spread log-uniformly over four decades.
inline FittedCurves random_curves(Rng& rng) {
  FittedCurves c;
  c.alpha = rng.log_uniform(2.3e2, 2.3e6);
  c.beta = rng.log_uniform(5.3e6, 5.3e10);
  c.kappa = rng.uniform(1.0, 4.0);
  c.gamma1 = rng.log_uniform(4.27e4, 4.27e8);
  c.gamma2 = rng.log_uniform(0.01, 100.0);
  return c;
}

inline ClientSpec random_client(Rng& rng, int L, const std::string& id = "c") {
  ClientSpec c;
  c.id = id;
  c.f_local = rng.log_uniform(1e9, 1e13);
  c.rate = rng.log_uniform(1e5, 1e9);
  c.batch = rng.integer(1, 64);
  c.epochs = rng.integer(1, 20);
  c.dataset_size = rng.integer(361, 3578);
  c.l_min = rng.chance(0.7) ? 1 : rng.integer(1, L);
  return c;
}

struct CutInstance {
  FittedCurves curves;
  ModelProfile profile;
  ClientSpec client;
  double f_server = 0.0;
};

inline CutInstance random_cut_instance(Rng& rng) {
  CutInstance in;
  const int L = rng.integer(10, 80);
  in.curves = random_curves(rng);
  in.profile = profile_from_curves(in.curves, L, rng.log_uniform(0.5, 2.0));
  in.client = random_client(rng, L);
  in.f_server = rng.log_uniform(1e10, 1e14);
  return in;
}

struct AllocInstance {
  FittedCurves curves;
  ModelProfile profile;
  std::vector<ClientSpec> clients;
  std::vector<int> cut_layers;
  ServerSpec server;
};

/// K clients sharing one model, in a regime where the server matters: local
/// compute is within two decades of the server budget and links are fast
/// enough that splitting can pay off.
inline AllocInstance random_alloc_instance(Rng& rng, int K) {
  AllocInstance in;
  const int L = rng.integer(10, 80);
  in.curves = random_curves(rng);
  in.profile = profile_from_curves(in.curves, L, rng.log_uniform(0.8, 1.5));
  in.server.f_max = rng.log_uniform(1e11, 1e13);
  for (int k = 0; k < K; ++k) {
    ClientSpec c = random_client(rng, L, "c" + std::to_string(k + 1));
    c.f_local = in.server.f_max * rng.log_uniform(0.01, 1.0);
    c.rate = rng.log_uniform(1e7, 1e9);
    in.clients.push_back(c);
    in.cut_layers.push_back(rng.chance(0.15) ? L : rng.integer(c.l_min, L));
  }
  return in;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace sflplan::testing
