#pragma once

#include "sflplan/types.hpp"

namespace sflplan::latency {

/// Session latency of a client that splits the model after layer `l`
/// (real-valued, l_min <= l < L) and receives `f_server` FLOPs/s from the
/// server:
///
///   2 alpha l^2 / r
///   + I|B| ( beta (1+kappa) (l / f^C + (L - l) / f^S) + 2 gamma1 / ((l + gamma2) r) )
LatencyBreakdown latency_split(const ClientSpec& client, double l, double f_server,
                               const FittedCurves& curves, int layer_count);

/// Session latency when the whole model trains locally:
/// 2|w| / r + I|B| Gamma / f^C.
LatencyBreakdown latency_fedavg(const ClientSpec& client, double total_model_bits,
                                double total_flops);

/// Piecewise session latency at an integer cut-layer: the FedAvg branch at
/// l = L, the split branch otherwise. Every other module evaluates client
/// latency through this function.
LatencyBreakdown latency_piecewise(const ClientSpec& client, int l, double f_server,
                                   const FittedCurves& curves, const ModelProfile& profile);

double latency_piecewise_total(const ClientSpec& client, int l, double f_server,
                               const FittedCurves& curves, const ModelProfile& profile);

// Analytic derivatives of the split branch. The cut-layer derivatives are
// defined on the closed interval [l_min, L] so the boundary case guards can
// be evaluated.
double dT_dl(const ClientSpec& client, double l, double f_server, const FittedCurves& curves,
             int layer_count);
double d2T_dl2(const ClientSpec& client, double l, const FittedCurves& curves, int layer_count);
double dT_dfs(const ClientSpec& client, double l, double f_server, const FittedCurves& curves,
              int layer_count);
double d2T_dfs2(const ClientSpec& client, double l, double f_server, const FittedCurves& curves,
                int layer_count);

/// Split-branch latency with the server term removed, i.e. the limit
/// f_server -> infinity:
///   I|B| beta (1+kappa) l / f^C + 2 (I|B| Lambda(l) + alpha l^2) / r
double server_independent_floor(const ClientSpec& client, double l, const FittedCurves& curves);

/// Server FLOPs a split session needs: I|B| beta (1+kappa) (L - l).
double server_load(const ClientSpec& client, double l, const FittedCurves& curves,
                   int layer_count);

}  // namespace sflplan::latency
