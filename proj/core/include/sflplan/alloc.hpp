#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sflplan/types.hpp"

namespace sflplan::alloc {

/// Outcome of splitting the server budget. Vectors are indexed like the
/// input client list.
struct AllocationResult {
  std::vector<std::size_t> order;  // client indices, ascending local-only latency
  int theta = 1;                   // 1-based position in `order` of the first served client
  std::vector<double> f_server;    // FLOPs/s, zero for unserved clients
  std::vector<bool> served;
  std::vector<double> local_latency;       // FedAvg session latency per client
  std::vector<double> per_client_latency;  // latency under this allocation
  double t_theta = 0.0;    // common latency of the served clients
  double objective = 0.0;  // max per-client latency

  std::size_t served_count() const;
};

/// Client indices ascending by local-only latency; equal latencies keep the
/// input order.
std::vector<std::size_t> sort_by_local_latency(std::span<const ClientSpec> clients,
                                               const ModelProfile& profile);

/// Server allocation that brings a split client (cut l < L) to latency
/// `t_theta`: I|B|(F^S + B^S) / (t_theta - floor). Throws
/// InfeasibleTargetError when t_theta does not exceed the client's
/// server-independent latency floor.
double closed_form_f_server(const ClientSpec& client, int l, const FittedCurves& curves,
                            const ModelProfile& profile, double t_theta);

/// Total allocation needed to hold every served client at latency T:
///   H(T) = sum_k load_k / (T - floor_k).
/// Infinite when T is at or below some floor.
double budget_needed(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                     const FittedCurves& curves, const ModelProfile& profile, double t);
double budget_needed_dT(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                        const FittedCurves& curves, const ModelProfile& profile, double t);
double budget_needed_d2T(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                         const FittedCurves& curves, const ModelProfile& profile, double t);

/// The unique T with H(T) = f_max. H is strictly decreasing, so plain
/// bisection on (max floor, max floor + sum load / f_max] converges; the
/// returned T satisfies H(T) <= f_max.
double solve_t_theta(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                     const FittedCurves& curves, const ModelProfile& profile, double f_max);

/// Min-max allocation of the server budget for fixed cut-layers.
///
/// Clients are ordered by local-only latency. For each candidate split of
/// that order, the prefix trains locally and every split-capable client of
/// the suffix (cut < L) is served at a common level from H(T) = f_max; the
/// split with the smallest resulting max latency wins (ties to the smaller
/// theta). Clients whose cut is L always train locally.
AllocationResult allocate(std::span<const ClientSpec> clients, std::span<const int> cut_layers,
                          const FittedCurves& curves, const ModelProfile& profile,
                          const ServerSpec& server);

}  // namespace sflplan::alloc
