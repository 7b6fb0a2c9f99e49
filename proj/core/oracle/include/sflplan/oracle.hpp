#pragma once

// Brute-force reference implementations for tests and baseline generation.
// Nothing here calls into the planner modules; latencies are re-derived
// phase by phase from the per-sample stage costs.

#include <functional>
#include <span>
#include <vector>

#include "sflplan/types.hpp"

namespace sflplan::oracle {

/// Session latency summed stage by stage: model download, I|B| repetitions
/// of (client FP, smashed upload, server FP, server BP, gradient download,
/// client BP), model upload. A cut at L trains the full model locally.
double phase_latency(const ClientSpec& client, int l, double f_server, const FittedCurves& curves,
                     const ModelProfile& profile);

struct ExhaustiveResult {
  int layer = 0;
  double latency = 0.0;
};

/// Argmin of phase_latency over every integer l in [l_min, L]; ties go to
/// the smallest layer.
ExhaustiveResult exhaustive_cut_layer(const ClientSpec& client, double f_server,
                                      const FittedCurves& curves, const ModelProfile& profile);

struct GridResult {
  std::vector<double> allocation;
  double objective = 0.0;
};

/// Exhaustive search over allocations f_k = (i_k / levels) f_max with
/// sum i_k <= levels. A client with f_k = 0 or cut L trains locally.
/// Limited to K <= 4.
GridResult grid_allocation(std::span<const ClientSpec> clients, std::span<const int> cut_layers,
                           const FittedCurves& curves, const ModelProfile& profile, double f_max,
                           int levels);

struct JointResult {
  std::vector<int> cut_layers;
  std::vector<double> allocation;
  double objective = 0.0;
};

/// Global optimum of the joint cut-layer and allocation problem. For a
/// target latency T each client needs, independently, zero server compute
/// if it finishes locally by T and otherwise the least over split layers of
/// load / (T - floor). The total need falls with T, so bisection on T finds
/// the smallest target the budget covers. Every layer of every client is
/// scanned per step.
JointResult joint_optimum(std::span<const ClientSpec> clients, const FittedCurves& curves,
                          const ModelProfile& profile, double f_max, double rel_tol = 1e-13);

/// (f(x + h) - f(x - h)) / 2h
double finite_difference(const std::function<double(double)>& f, double x, double h);

/// (f(x + h) - 2 f(x) + f(x - h)) / h^2
double second_difference(const std::function<double(double)>& f, double x, double h);

/// Central differences at geometrically shrinking steps starting from `h`,
/// extrapolated to zero step (Ridders). Far less sensitive to the choice of
/// `h` than a single difference. `error`, if given, receives the estimate.
double extrapolated_difference(const std::function<double(double)>& f, double x, double h,
                               double* error = nullptr);

}  // namespace sflplan::oracle
