#include "sflplan/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"

namespace sflplan::alloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SplitTerms {
  double floor;  // seconds
  double load;   // FLOPs
};

SplitTerms split_terms(const ClientSpec& client, int l, const FittedCurves& curves,
                       const ModelProfile& profile) {
  const int L = profile.layer_count;
  if (l < client.l_min || l >= L) {
    throw DomainError("client " + client.id + " has cut-layer " + std::to_string(l) +
                      "; a served client needs l_min <= l < L");
  }
  return {latency::server_independent_floor(client, l, curves),
          latency::server_load(client, l, curves, L)};
}

std::vector<SplitTerms> all_terms(std::span<const ClientSpec> served, std::span<const int> cuts,
                                  const FittedCurves& curves, const ModelProfile& profile) {
  if (served.size() != cuts.size()) throw ValidationError("one cut-layer per served client");
  std::vector<SplitTerms> out;
  out.reserve(served.size());
  for (std::size_t i = 0; i < served.size(); ++i) {
    out.push_back(split_terms(served[i], cuts[i], curves, profile));
  }
  return out;
}

double h_of(const std::vector<SplitTerms>& terms, double t) {
  double h = 0.0;
  for (const auto& s : terms) {
    const double gap = t - s.floor;
    if (!(gap > 0.0)) return kInf;
    h += s.load / gap;
  }
  return h;
}

double solve_level(const std::vector<SplitTerms>& terms, double f_max) {
  if (!(f_max > 0.0) || !std::isfinite(f_max)) throw DomainError("f_max must be positive");
  if (terms.empty()) throw DomainError("solve_t_theta needs at least one served client");
  if (terms.size() == 1) return terms.front().floor + terms.front().load / f_max;

  double max_floor = -kInf;
  double total_load = 0.0;
  for (const auto& s : terms) {
    max_floor = std::max(max_floor, s.floor);
    total_load += s.load;
  }
  double lo = max_floor;
  double hi = max_floor + total_load / f_max;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h_of(terms, mid) > f_max) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace

std::size_t AllocationResult::served_count() const {
  return static_cast<std::size_t>(std::count(served.begin(), served.end(), true));
}

std::vector<std::size_t> sort_by_local_latency(std::span<const ClientSpec> clients,
                                               const ModelProfile& profile) {
  if (clients.empty()) throw DomainError("at least one client is required");
  std::vector<double> local(clients.size());
  for (std::size_t k = 0; k < clients.size(); ++k) {
    local[k] =
        latency::latency_fedavg(clients[k], profile.total_model_bits, profile.total_flops).total_s;
  }
  std::vector<std::size_t> order(clients.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return local[a] < local[b]; });
  return order;
}

double closed_form_f_server(const ClientSpec& client, int l, const FittedCurves& curves,
                            const ModelProfile& profile, double t_theta) {
  const SplitTerms s = split_terms(client, l, curves, profile);
  const double gap = t_theta - s.floor;
  if (!(gap > 0.0)) {
    throw InfeasibleTargetError("target latency " + std::to_string(t_theta) +
                                " s does not exceed the floor " + std::to_string(s.floor) +
                                " s of client " + client.id);
  }
  return s.load / gap;
}

double budget_needed(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                     const FittedCurves& curves, const ModelProfile& profile, double t) {
  return h_of(all_terms(served, cut_layers, curves, profile), t);
}

double budget_needed_dT(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                        const FittedCurves& curves, const ModelProfile& profile, double t) {
  double d = 0.0;
  for (const auto& s : all_terms(served, cut_layers, curves, profile)) {
    const double gap = t - s.floor;
    if (!(gap > 0.0)) throw DomainError("T must exceed every served floor");
    d -= s.load / (gap * gap);
  }
  return d;
}

double budget_needed_d2T(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                         const FittedCurves& curves, const ModelProfile& profile, double t) {
  double d = 0.0;
  for (const auto& s : all_terms(served, cut_layers, curves, profile)) {
    const double gap = t - s.floor;
    if (!(gap > 0.0)) throw DomainError("T must exceed every served floor");
    d += 2.0 * s.load / (gap * gap * gap);
  }
  return d;
}

double solve_t_theta(std::span<const ClientSpec> served, std::span<const int> cut_layers,
                     const FittedCurves& curves, const ModelProfile& profile, double f_max) {
  if (!(f_max > 0.0)) throw DomainError("f_max must be positive");
  return solve_level(all_terms(served, cut_layers, curves, profile), f_max);
}

AllocationResult allocate(std::span<const ClientSpec> clients, std::span<const int> cut_layers,
                          const FittedCurves& curves, const ModelProfile& profile,
                          const ServerSpec& server) {
  server.validate();
  const int L = profile.layer_count;
  const std::size_t K = clients.size();
  if (K == 0) throw DomainError("at least one client is required");
  if (cut_layers.size() != K) throw ValidationError("one cut-layer per client is required");
  for (std::size_t k = 0; k < K; ++k) {
    clients[k].validate(L);
    if (cut_layers[k] < clients[k].l_min || cut_layers[k] > L) {
      throw DomainError("cut-layer of client " + clients[k].id + " outside [l_min, L]");
    }
  }

  AllocationResult out;
  out.order = sort_by_local_latency(clients, profile);
  out.local_latency.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    out.local_latency[k] =
        latency::latency_fedavg(clients[k], profile.total_model_bits, profile.total_flops).total_s;
  }

  // Split-capable clients in sorted order, and the worst local-only client
  // that cannot be served at all.
  std::vector<std::size_t> eligible;
  double ineligible_max = 0.0;
  for (std::size_t k : out.order) {
    if (cut_layers[k] < L) {
      eligible.push_back(k);
    } else {
      ineligible_max = std::max(ineligible_max, out.local_latency[k]);
    }
  }
  std::vector<SplitTerms> terms;
  terms.reserve(eligible.size());
  for (std::size_t k : eligible) terms.push_back(split_terms(clients[k], cut_layers[k], curves, profile));

  const std::size_t m = eligible.size();
  std::size_t best_j = m;
  double best_obj = kInf;
  double best_level = kInf;
  std::vector<std::string> diagnostics;
  for (std::size_t j = 0; j <= m; ++j) {
    const double prefix_max = j == 0 ? 0.0 : out.local_latency[eligible[j - 1]];
    double level = kInf;
    double obj = 0.0;
    if (j < m) {
      const std::vector<SplitTerms> suffix(terms.begin() + static_cast<std::ptrdiff_t>(j), terms.end());
      level = solve_level(suffix, server.f_max);
      obj = std::max({level, prefix_max, ineligible_max});
    } else {
      obj = std::max(prefix_max, ineligible_max);
    }
    diagnostics.push_back("split after " + std::to_string(j) + " local-only clients: level " +
                          std::to_string(level) + " s, objective " + std::to_string(obj) + " s");
    if (obj < best_obj) {
      best_obj = obj;
      best_j = j;
      best_level = level;
    }
  }
  if (!std::isfinite(best_obj)) {
    throw InfeasibleError("no group split yields a finite latency", std::move(diagnostics));
  }

  out.f_server.assign(K, 0.0);
  out.served.assign(K, false);
  out.per_client_latency = out.local_latency;
  for (std::size_t i = best_j; i < m; ++i) {
    const std::size_t k = eligible[i];
    out.served[k] = true;
    out.f_server[k] = closed_form_f_server(clients[k], cut_layers[k], curves, profile, best_level);
    out.per_client_latency[k] =
        latency::latency_piecewise_total(clients[k], cut_layers[k], out.f_server[k], curves, profile);
  }

  out.theta = static_cast<int>(K) + 1;
  if (best_j < m) {
    const auto pos = std::find(out.order.begin(), out.order.end(), eligible[best_j]);
    out.theta = static_cast<int>(pos - out.order.begin()) + 1;
    out.t_theta = best_level;
  } else {
    out.t_theta = *std::max_element(out.local_latency.begin(), out.local_latency.end());
  }
  out.objective = *std::max_element(out.per_client_latency.begin(), out.per_client_latency.end());
  return out;
}

}  // namespace sflplan::alloc
