#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sflplan/types.hpp"

namespace sflplan::optimizer {

struct Options {
  int max_iters = 20;
  double conv_tol = 1e-6;  // relative change in the objective
  // Floor-only rounding and no probe allocation for unserved clients.
  bool strict_paper_mode = false;
  // Starting allocation; defaults to an equal split of f_max.
  std::optional<std::vector<double>> initial_allocation;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
};

/// Joint solution. Vectors are indexed like the input client list. Clients
/// that receive no server compute carry cut-layer L.
struct Plan {
  std::vector<std::string> client_ids;
  std::vector<int> cut_layers;
  std::vector<double> f_server;
  int theta = 1;
  double objective = 0.0;
  std::vector<LatencyBreakdown> per_client;
  std::vector<IterationRecord> iterations;
  bool converged = false;
};

/// Alternates cut-layer selection (given the allocation) and min-max
/// allocation (given the cut-layers) starting from an equal split, until
/// the relative objective change drops to conv_tol or max_iters is hit.
/// Returns the best plan seen.
Plan optimize(std::span<const ClientSpec> clients, const FittedCurves& curves,
              const ModelProfile& profile, const ServerSpec& server, const Options& options = {});

/// Max per-client latency recomputed from scratch.
double objective(const Plan& plan, std::span<const ClientSpec> clients, const FittedCurves& curves,
                 const ModelProfile& profile);

/// Per-client breakdowns for a cut-layer / allocation pair.
std::vector<LatencyBreakdown> evaluate(std::span<const ClientSpec> clients,
                                       std::span<const int> cut_layers,
                                       std::span<const double> f_server,
                                       const FittedCurves& curves, const ModelProfile& profile);

}  // namespace sflplan::optimizer
