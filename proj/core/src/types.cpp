#include "sflplan/types.hpp"

#include <cmath>
#include <string>

#include "sflplan/error.hpp"

namespace sflplan {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void check_array(const std::vector<double>& a, int layers, const char* name) {
  if (static_cast<int>(a.size()) != layers) {
    throw InvalidProfileError(std::string(name) + " has " + std::to_string(a.size()) +
                              " entries, expected " + std::to_string(layers));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!finite_nonneg(a[i])) {
      throw InvalidProfileError(std::string(name) + "[" + std::to_string(i + 1) +
                                "] is negative or not finite");
    }
  }
}

void check_nondecreasing(const std::vector<double>& a, const char* name) {
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] < a[i - 1]) {
      throw InvalidProfileError(std::string(name) + " decreases at layer " +
                                std::to_string(i + 1));
    }
  }
}

}  // namespace

void ModelProfile::validate() const {
  if (layer_count < 1) throw InvalidProfileError("layer_count must be positive");
  check_array(client_model_bits, layer_count, "client_model_bits");
  check_array(client_flops_fwd, layer_count, "client_flops_fwd");
  check_array(smashed_bits, layer_count, "smashed_bits");
  check_nondecreasing(client_model_bits, "client_model_bits");
  check_nondecreasing(client_flops_fwd, "client_flops_fwd");
  if (!(std::isfinite(total_model_bits) && total_model_bits > 0.0)) {
    throw InvalidProfileError("total_model_bits must be positive");
  }
  if (!(std::isfinite(total_flops) && total_flops > 0.0)) {
    throw InvalidProfileError("total_flops must be positive");
  }
  const double last = client_model_bits.back();
  if (std::abs(last - total_model_bits) > 1e-9 * total_model_bits) {
    throw InvalidProfileError("client_model_bits[L] must equal total_model_bits");
  }
}

void FittedCurves::validate() const {
  if (!finite_nonneg(alpha)) throw DomainError("alpha must be >= 0");
  if (!(std::isfinite(beta) && beta > 0.0)) throw DomainError("beta must be > 0");
  if (!(std::isfinite(kappa) && kappa >= 1.0)) throw DomainError("kappa must be >= 1");
  if (!(std::isfinite(gamma1) && gamma1 > 0.0)) throw DomainError("gamma1 must be > 0");
  if (!finite_nonneg(gamma2)) throw DomainError("gamma2 must be >= 0");
  if (r2_size > 1.0 || r2_flops > 1.0 || r2_smashed > 1.0) {
    throw DomainError("determination coefficients cannot exceed 1");
  }
}

void ClientSpec::validate(int layer_count) const {
  if (!(std::isfinite(f_local) && f_local > 0.0)) {
    throw DomainError("client " + id + ": f_local must be > 0");
  }
  if (!(std::isfinite(rate) && rate > 0.0)) throw DomainError("client " + id + ": rate must be > 0");
  if (batch < 1) throw DomainError("client " + id + ": batch must be >= 1");
  if (epochs < 1) throw DomainError("client " + id + ": epochs must be >= 1");
  if (dataset_size < 1) throw DomainError("client " + id + ": dataset_size must be >= 1");
  if (l_min < 1 || l_min > layer_count) {
    throw DomainError("client " + id + ": l_min must lie in [1, L]");
  }
}

void ServerSpec::validate() const {
  if (!(std::isfinite(f_max) && f_max > 0.0)) throw DomainError("f_max must be > 0");
}

}  // namespace sflplan
