#include "sflplan/sim.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"

namespace sflplan::sim {

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class Timeline {
public:
  Timeline(std::vector<Event>& events, std::string id) : events_(events), id_(std::move(id)) {}

  void add(Phase phase, double duration) {
    events_.push_back({id_, phase, now_, now_ + duration});
    now_ += duration;
  }
  double now() const { return now_; }

private:
  std::vector<Event>& events_;
  std::string id_;
  double now_ = 0.0;
};

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::distribute: return "distribute";
    case Phase::client_fp: return "client_fp";
    case Phase::upload_smashed: return "upload_smashed";
    case Phase::server_fp: return "server_fp";
    case Phase::server_bp: return "server_bp";
    case Phase::download_grads: return "download_grads";
    case Phase::client_bp: return "client_bp";
    case Phase::upload_model: return "upload_model";
    case Phase::aggregate: return "aggregate";
  }
  return "unknown";
}

RoundTrace simulate_round(const optimizer::Plan& plan, std::span<const ClientSpec> clients,
                          const FittedCurves& curves, const ModelProfile& profile,
                          const SimOptions& options) {
  const int L = profile.layer_count;
  if (plan.client_ids.size() != plan.cut_layers.size() ||
      plan.client_ids.size() != plan.f_server.size()) {
    throw ValidationError("plan vectors have inconsistent lengths");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < plan.client_ids.size(); ++i) index.emplace(plan.client_ids[i], i);
  if (index.size() != clients.size() || plan.client_ids.size() != clients.size()) {
    throw ValidationError("plan and scenario list different clients");
  }

  std::size_t expected_events = 1;
  for (const auto& c : clients) {
    expected_events += options.expand_epochs ? 2 + 6 * static_cast<std::size_t>(c.epochs) : 8;
  }
  if (expected_events > options.max_events) {
    throw DomainError("trace would hold " + std::to_string(expected_events) + " events, cap is " +
                      std::to_string(options.max_events));
  }

  RoundTrace trace;
  trace.events.reserve(expected_events);
  double total_samples = 0.0;
  for (const auto& c : clients) total_samples += c.dataset_size;

  for (const auto& c : clients) {
    const auto it = index.find(c.id);
    if (it == index.end()) throw ValidationError("plan has no entry for client " + c.id);
    const int l = plan.cut_layers[it->second];
    const double f = plan.f_server[it->second];
    if (l < c.l_min || l > L) {
      throw ValidationError("plan cut-layer for client " + c.id + " is outside [l_min, L]");
    }
    if (l < L && !(f > 0.0)) {
      throw ValidationError("client " + c.id + " splits at layer " + std::to_string(l) +
                            " without a server allocation");
    }
    const LatencyBreakdown b = latency::latency_piecewise(c, l, f, curves, profile);

    Timeline t(trace.events, c.id);
    t.add(Phase::distribute, 0.5 * b.model_transfer_s);
    if (l == L) {
      t.add(Phase::client_fp, b.client_fp_s + b.client_bp_s);
    } else {
      const int blocks = options.expand_epochs ? c.epochs : 1;
      const double scale = 1.0 / blocks;
      for (int e = 0; e < blocks; ++e) {
        t.add(Phase::client_fp, b.client_fp_s * scale);
        t.add(Phase::upload_smashed, b.smashed_up_s * scale);
        t.add(Phase::server_fp, b.server_fp_s * scale);
        t.add(Phase::server_bp, b.server_bp_s * scale);
        t.add(Phase::download_grads, b.grads_down_s * scale);
        t.add(Phase::client_bp, b.client_bp_s * scale);
      }
    }
    t.add(Phase::upload_model, 0.5 * b.model_transfer_s);

    trace.client_ids.push_back(c.id);
    trace.client_finish_s.push_back(t.now());
    trace.aggregation_weights.push_back(c.dataset_size / total_samples);
    trace.per_client.push_back(b);
  }

  trace.round_latency_s =
      *std::max_element(trace.client_finish_s.begin(), trace.client_finish_s.end());
  trace.events.push_back({"", Phase::aggregate, trace.round_latency_s, trace.round_latency_s});
  return trace;
}

Campaign simulate_campaign(const optimizer::Plan& plan, std::span<const ClientSpec> clients,
                           const FittedCurves& curves, const ModelProfile& profile, int rounds,
                           const SimOptions& options) {
  if (rounds < 1) throw DomainError("rounds must be >= 1");
  Campaign out;
  const RoundTrace one = simulate_round(plan, clients, curves, profile, options);
  out.rounds.assign(static_cast<std::size_t>(rounds), one);
  for (const auto& r : out.rounds) out.cumulative_s += r.round_latency_s;
  return out;
}

std::string trace_csv(const RoundTrace& trace) {
  std::string out = "client_id,phase,start_s,end_s\r\n";
  for (const auto& e : trace.events) {
    out += fmt::format("{},{},{},{}\r\n", csv_field(e.client_id), to_string(e.phase), e.start_s,
                       e.end_s);
  }
  return out;
}

std::string summary_csv(const RoundTrace& trace, const optimizer::Plan& plan) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < plan.client_ids.size(); ++i) index.emplace(plan.client_ids[i], i);
  std::string out =
      "client_id,cut_layer,f_server_flops,model_transfer_s,client_fp_s,smashed_up_s,server_fp_s,"
      "server_bp_s,grads_down_s,client_bp_s,total_s,finish_s,aggregation_weight\r\n";
  for (std::size_t k = 0; k < trace.client_ids.size(); ++k) {
    const auto& b = trace.per_client[k];
    const std::size_t p = index.at(trace.client_ids[k]);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\r\n", csv_field(trace.client_ids[k]),
                       plan.cut_layers[p], plan.f_server[p], b.model_transfer_s, b.client_fp_s,
                       b.smashed_up_s, b.server_fp_s, b.server_bp_s, b.grads_down_s, b.client_bp_s,
                       b.total_s, trace.client_finish_s[k], trace.aggregation_weights[k]);
  }
  return out;
}

}  // namespace sflplan::sim
