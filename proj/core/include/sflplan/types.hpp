#pragma once

#include <string>
#include <vector>

namespace sflplan {

// All quantities are SI-ish core units: bits, FLOPs, FLOPs/s, bits/s and
// seconds. Unit conversion (Mb/s, GFLOPs/s) happens only at file boundaries.

/// Per-layer ground truth for an L-layer model. Layers are 1-based; index
/// `l - 1` of each array describes a cut after layer `l` (layers 1..l run
/// on the client).
struct ModelProfile {
  int layer_count = 0;
  std::vector<double> client_model_bits;  // cumulative |w^C| for a cut at l
  std::vector<double> client_flops_fwd;   // sample-wise client FP FLOPs for a cut at l
  std::vector<double> smashed_bits;       // per-sample activation size at l; 0 at l = L
  double total_model_bits = 0.0;          // |w|
  double total_flops = 0.0;               // per-sample training FLOPs (FP + BP)

  /// Throws InvalidProfileError when the structural invariants fail.
  void validate() const;
};

/// Regression parameters for the three per-layer curves and the BP/FP ratio.
///   |w^C|(l) = alpha l^2
///   F^C(l)   = beta l,  B^C(l) = kappa beta l
///   Lambda(l) = gamma1 / (l + gamma2)
struct FittedCurves {
  double alpha = 0.0;
  double beta = 0.0;
  double kappa = 1.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double r2_size = 1.0;
  double r2_flops = 1.0;
  double r2_smashed = 1.0;

  void validate() const;
};

struct TimingPair {
  double fp_seconds = 0.0;
  double bp_seconds = 0.0;
};

using TimingPairs = std::vector<TimingPair>;

struct ClientSpec {
  std::string id;
  double f_local = 0.0;  // FLOPs/s
  double rate = 0.0;     // bits/s, same up and down
  int batch = 1;         // |B|
  int epochs = 1;        // I
  int dataset_size = 1;  // n
  int l_min = 1;         // privacy floor on the cut-layer

  /// Samples processed in one local training session, I * |B|.
  double samples_per_session() const noexcept {
    return static_cast<double>(epochs) * static_cast<double>(batch);
  }

  void validate(int layer_count) const;
};

struct ServerSpec {
  double f_max = 0.0;  // FLOPs/s shared across served clients

  void validate() const;
};

/// One client's session latency split by phase. For a FedAvg session
/// (cut at L) the fused local FP+BP compute is reported in `client_fp_s`
/// and `client_bp_s` is zero.
struct LatencyBreakdown {
  double model_transfer_s = 0.0;  // download + upload of the client-side model
  double client_fp_s = 0.0;
  double smashed_up_s = 0.0;
  double server_fp_s = 0.0;
  double server_bp_s = 0.0;
  double grads_down_s = 0.0;
  double client_bp_s = 0.0;
  double total_s = 0.0;

  double component_sum() const noexcept {
    return model_transfer_s + client_fp_s + smashed_up_s + server_fp_s + server_bp_s +
           grads_down_s + client_bp_s;
  }
  double communication_s() const noexcept {
    return model_transfer_s + smashed_up_s + grads_down_s;
  }
  double client_compute_s() const noexcept { return client_fp_s + client_bp_s; }
  double server_compute_s() const noexcept { return server_fp_s + server_bp_s; }
};

/// Numeric tolerances shared by the solvers.
struct Tolerances {
  static constexpr double root_rel = 1e-9;       // scalar root solves
  static constexpr double aggregate_rel = 1e-6;  // sums and equal-latency checks
  static constexpr double stationarity_layers = 1e-6;
};

}  // namespace sflplan
