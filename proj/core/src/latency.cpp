#include "sflplan/latency.hpp"

#include <cmath>
#include <string>

#include "sflplan/error.hpp"

namespace sflplan::latency {

namespace {

void check_common(const ClientSpec& client, double l, double f_server, int layer_count,
                  bool allow_l_equal_L) {
  if (layer_count < 1) throw DomainError("layer count must be positive");
  client.validate(layer_count);
  const bool in_range = allow_l_equal_L ? (l >= client.l_min && l <= layer_count)
                                        : (l >= client.l_min && l < layer_count);
  if (!std::isfinite(l) || !in_range) {
    throw DomainError("cut-layer " + std::to_string(l) + " outside the admissible domain of client " +
                      client.id);
  }
  if (!(f_server > 0.0) || std::isnan(f_server)) {
    throw DomainError("server allocation must be positive for a split session");
  }
}

double smashed(const FittedCurves& c, double l) { return c.gamma1 / (l + c.gamma2); }

}  // namespace

LatencyBreakdown latency_split(const ClientSpec& client, double l, double f_server,
                               const FittedCurves& curves, int layer_count) {
  check_common(client, l, f_server, layer_count, false);
  const double ib = client.samples_per_session();
  const double fwd_client = curves.beta * l;
  const double fwd_server = curves.beta * (layer_count - l);
  LatencyBreakdown b;
  b.model_transfer_s = 2.0 * curves.alpha * l * l / client.rate;
  b.client_fp_s = ib * fwd_client / client.f_local;
  b.client_bp_s = ib * curves.kappa * fwd_client / client.f_local;
  b.server_fp_s = ib * fwd_server / f_server;
  b.server_bp_s = ib * curves.kappa * fwd_server / f_server;
  b.smashed_up_s = ib * smashed(curves, l) / client.rate;
  b.grads_down_s = b.smashed_up_s;
  b.total_s = b.component_sum();
  return b;
}

LatencyBreakdown latency_fedavg(const ClientSpec& client, double total_model_bits,
                                double total_flops) {
  if (!(total_model_bits > 0.0) || !(total_flops > 0.0)) {
    throw DomainError("model size and total FLOPs must be positive");
  }
  if (!(client.f_local > 0.0) || !(client.rate > 0.0) || client.batch < 1 || client.epochs < 1) {
    throw DomainError("invalid client " + client.id);
  }
  LatencyBreakdown b;
  b.model_transfer_s = 2.0 * total_model_bits / client.rate;
  b.client_fp_s = client.samples_per_session() * total_flops / client.f_local;
  b.total_s = b.component_sum();
  return b;
}

LatencyBreakdown latency_piecewise(const ClientSpec& client, int l, double f_server,
                                   const FittedCurves& curves, const ModelProfile& profile) {
  const int L = profile.layer_count;
  if (l < client.l_min || l > L) {
    throw DomainError("cut-layer " + std::to_string(l) + " outside [l_min, L] for client " +
                      client.id);
  }
  if (l == L) return latency_fedavg(client, profile.total_model_bits, profile.total_flops);
  return latency_split(client, static_cast<double>(l), f_server, curves, L);
}

double latency_piecewise_total(const ClientSpec& client, int l, double f_server,
                               const FittedCurves& curves, const ModelProfile& profile) {
  return latency_piecewise(client, l, f_server, curves, profile).total_s;
}

double dT_dl(const ClientSpec& client, double l, double f_server, const FittedCurves& curves,
             int layer_count) {
  check_common(client, l, f_server, layer_count, true);
  const double ib = client.samples_per_session();
  const double u = l + curves.gamma2;
  return 4.0 * curves.alpha * l / client.rate +
         ib * (curves.beta * (1.0 + curves.kappa) * (1.0 / client.f_local - 1.0 / f_server) -
               2.0 * curves.gamma1 / (client.rate * u * u));
}

double d2T_dl2(const ClientSpec& client, double l, const FittedCurves& curves, int layer_count) {
  check_common(client, l, 1.0, layer_count, true);
  const double u = l + curves.gamma2;
  return 4.0 * curves.alpha / client.rate +
         4.0 * curves.gamma1 * client.samples_per_session() / (client.rate * u * u * u);
}

double dT_dfs(const ClientSpec& client, double l, double f_server, const FittedCurves& curves,
              int layer_count) {
  check_common(client, l, f_server, layer_count, false);
  return -server_load(client, l, curves, layer_count) / (f_server * f_server);
}

double d2T_dfs2(const ClientSpec& client, double l, double f_server, const FittedCurves& curves,
                int layer_count) {
  check_common(client, l, f_server, layer_count, false);
  return 2.0 * server_load(client, l, curves, layer_count) / (f_server * f_server * f_server);
}

double server_independent_floor(const ClientSpec& client, double l, const FittedCurves& curves) {
  const double ib = client.samples_per_session();
  return ib * curves.beta * (1.0 + curves.kappa) * l / client.f_local +
         2.0 * (ib * smashed(curves, l) + curves.alpha * l * l) / client.rate;
}

double server_load(const ClientSpec& client, double l, const FittedCurves& curves,
                   int layer_count) {
  return client.samples_per_session() * curves.beta * (1.0 + curves.kappa) * (layer_count - l);
}

}  // namespace sflplan::latency
