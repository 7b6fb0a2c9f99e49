#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sflplan/optimizer.hpp"
#include "sflplan/types.hpp"

namespace sflplan::sim {

enum class Phase {
  distribute,
  client_fp,
  upload_smashed,
  server_fp,
  server_bp,
  download_grads,
  client_bp,
  upload_model,
  aggregate,
};

std::string_view to_string(Phase phase);

struct Event {
  std::string client_id;  // empty for the aggregate event
  Phase phase = Phase::distribute;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct RoundTrace {
  std::vector<Event> events;
  double round_latency_s = 0.0;
  std::vector<std::string> client_ids;
  std::vector<double> client_finish_s;      // end of each client's upload_model
  std::vector<double> aggregation_weights;  // n_k / sum n
  std::vector<LatencyBreakdown> per_client;
};

struct SimOptions {
  // One block per training stage and epoch instead of one block per stage.
  bool expand_epochs = false;
  std::size_t max_events = 100000;
};

/// Replays one synchronized round: every client downloads its model part,
/// runs the six training stages (collapsed into per-session blocks), and
/// uploads; aggregation starts once the last upload finishes. Local-only
/// clients (cut at L) run a single compute block between download and
/// upload.
RoundTrace simulate_round(const optimizer::Plan& plan, std::span<const ClientSpec> clients,
                          const FittedCurves& curves, const ModelProfile& profile,
                          const SimOptions& options = {});

struct Campaign {
  std::vector<RoundTrace> rounds;
  double cumulative_s = 0.0;
};

Campaign simulate_campaign(const optimizer::Plan& plan, std::span<const ClientSpec> clients,
                           const FittedCurves& curves, const ModelProfile& profile, int rounds,
                           const SimOptions& options = {});

/// CSV (RFC 4180) with columns client_id,phase,start_s,end_s.
std::string trace_csv(const RoundTrace& trace);
/// Per-client totals and phase components.
std::string summary_csv(const RoundTrace& trace, const optimizer::Plan& plan);

}  // namespace sflplan::sim
