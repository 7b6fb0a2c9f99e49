#include "sflplan/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sflplan/alloc.hpp"
#include "sflplan/cutlayer.hpp"
#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"

namespace sflplan::optimizer {

namespace {

double max_total(const std::vector<LatencyBreakdown>& per_client) {
  double m = 0.0;
  for (const auto& b : per_client) m = std::max(m, b.total_s);
  return m;
}

}  // namespace

std::vector<LatencyBreakdown> evaluate(std::span<const ClientSpec> clients,
                                       std::span<const int> cut_layers,
                                       std::span<const double> f_server,
                                       const FittedCurves& curves, const ModelProfile& profile) {
  if (cut_layers.size() != clients.size() || f_server.size() != clients.size()) {
    throw ValidationError("plan vectors do not match the client list");
  }
  std::vector<LatencyBreakdown> out;
  out.reserve(clients.size());
  for (std::size_t k = 0; k < clients.size(); ++k) {
    if (cut_layers[k] < profile.layer_count && !(f_server[k] > 0.0)) {
      throw ValidationError("client " + clients[k].id + " splits at layer " +
                            std::to_string(cut_layers[k]) + " but has no server allocation");
    }
    out.push_back(
        latency::latency_piecewise(clients[k], cut_layers[k], f_server[k], curves, profile));
  }
  return out;
}

double objective(const Plan& plan, std::span<const ClientSpec> clients, const FittedCurves& curves,
                 const ModelProfile& profile) {
  return max_total(evaluate(clients, plan.cut_layers, plan.f_server, curves, profile));
}

Plan optimize(std::span<const ClientSpec> clients, const FittedCurves& curves,
              const ModelProfile& profile, const ServerSpec& server, const Options& options) {
  if (clients.empty()) throw DomainError("at least one client is required");
  if (options.max_iters < 1) throw DomainError("max_iters must be >= 1");
  if (!(options.conv_tol > 0.0)) throw DomainError("conv_tol must be > 0");
  server.validate();
  curves.validate();
  profile.validate();
  const int L = profile.layer_count;
  const std::size_t K = clients.size();
  for (const auto& c : clients) c.validate(L);

  std::vector<double> allocation(K, server.f_max / static_cast<double>(K));
  if (options.initial_allocation) {
    if (options.initial_allocation->size() != K) {
      throw ValidationError("initial allocation needs one entry per client");
    }
    allocation = *options.initial_allocation;
  }
  const double Kd = static_cast<double>(K);
  const std::vector<double> probes{server.f_max / Kd, server.f_max / std::sqrt(Kd), server.f_max};
  const cutlayer::SelectOptions select_options{options.strict_paper_mode};

  Plan best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<IterationRecord> trace;
  double previous = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;

  for (int i = 0; i < options.max_iters; ++i) {
    std::vector<int> cuts(K, L);
    bool any_unserved = false;
    for (std::size_t k = 0; k < K; ++k) {
      if (allocation[k] > 0.0) {
        cuts[k] = cutlayer::select_cut_layer(clients[k], allocation[k], curves, profile,
                                             select_options);
      } else {
        any_unserved = true;
      }
    }

    // Unserved clients have no allocation to select a cut against. Besides
    // keeping them local, they are probed at a few budget levels so they
    // can re-enter the served group; the allocation step then decides.
    std::vector<std::vector<int>> candidates{cuts};
    if (any_unserved && !options.strict_paper_mode) {
      for (double probe : probes) {
        std::vector<int> probed = cuts;
        for (std::size_t k = 0; k < K; ++k) {
          if (allocation[k] > 0.0) continue;
          probed[k] = cutlayer::select_cut_layer(clients[k], probe, curves, profile, select_options);
        }
        if (probed != candidates.back() && probed != candidates.front()) {
          candidates.push_back(std::move(probed));
        }
      }
    }

    alloc::AllocationResult a;
    try {
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        auto trial = alloc::allocate(clients, candidates[c], curves, profile, server);
        if (c == 0 || trial.objective < a.objective) {
          a = std::move(trial);
          cuts = candidates[c];
        }
      }
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("iteration " + std::to_string(i) + ": " + e.what(), e.diagnostics());
    }

    Plan current;
    current.client_ids.reserve(K);
    for (const auto& c : clients) current.client_ids.push_back(c.id);
    current.cut_layers = cuts;
    for (std::size_t k = 0; k < K; ++k) {
      if (!a.served[k]) current.cut_layers[k] = L;
    }
    current.f_server = a.f_server;
    current.theta = a.theta;
    current.per_client = evaluate(clients, current.cut_layers, current.f_server, curves, profile);
    current.objective = max_total(current.per_client);
    trace.push_back({i, current.objective});

    if (current.objective < best.objective) best = std::move(current);

    if (i > 0 && std::abs(previous - trace.back().objective) <= options.conv_tol * previous) {
      converged = true;
      break;
    }
    previous = trace.back().objective;
    allocation = a.f_server;
  }

  best.iterations = std::move(trace);
  best.converged = converged;
  return best;
}

}  // namespace sflplan::optimizer
