#include "sflplan/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "json_util.hpp"
#include "sflplan/error.hpp"

namespace sflplan::profile {

namespace {

// Portable U[0,1) from a 64-bit engine; std::uniform_real_distribution is
// not bit-identical across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double noise_factor(std::mt19937_64& rng, double amplitude) {
  return 1.0 + amplitude * (2.0 * unit_uniform(rng) - 1.0);
}

bool all_zero(const std::vector<double>& a, std::size_t count) {
  return std::all_of(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(count),
                     [](double v) { return v == 0.0; });
}

double r2_for(const std::string& curve, std::span<const double> truth,
              std::span<const double> predicted) {
  try {
    return determination_coefficient(truth, predicted);
  } catch (const UndefinedRError& e) {
    throw FitFailureError(curve, e.what());
  }
}

struct HyperbolaFit {
  double gamma1;
  double gamma2;
  double sse;
};

// Fits y_l = g1 / (l + g2) over l = 1..n with g1 profiled out.
class HyperbolaFitter {
public:
  explicit HyperbolaFitter(std::span<const double> y) : y_(y) {}

  HyperbolaFit at(double g2) const {
    double yu = 0.0;
    double uu = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double u = 1.0 / (static_cast<double>(i + 1) + g2);
      yu += y_[i] * u;
      uu += u * u;
    }
    const double g1 = yu / uu;
    double sse = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double r = y_[i] - g1 / (static_cast<double>(i + 1) + g2);
      sse += r * r;
    }
    return {g1, g2, sse};
  }

  // d SSE / d g2 at the profiled g1 (envelope theorem).
  double gradient(double g2) const {
    const HyperbolaFit f = at(g2);
    double g = 0.0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double u = 1.0 / (static_cast<double>(i + 1) + g2);
      const double r = y_[i] - f.gamma1 * u;
      g += 2.0 * r * f.gamma1 * u * u;
    }
    return g;
  }

private:
  std::span<const double> y_;
};

HyperbolaFit fit_hyperbola(std::span<const double> y, double hi, double tol) {
  const HyperbolaFitter fitter(y);
  constexpr double inv_phi = 0.6180339887498949;
  double a = 0.0;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fitter.at(c).sse;
  double fd = fitter.at(d).sse;
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fitter.at(c).sse;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fitter.at(d).sse;
    }
  }
  double x = 0.5 * (a + b);

  // Polish on the gradient so exact curves are recovered to round-off.
  double lo = std::max(0.0, x - 4.0 * tol);
  double up = std::min(hi, x + 4.0 * tol);
  double glo = fitter.gradient(lo);
  double gup = fitter.gradient(up);
  if (glo < 0.0 && gup > 0.0) {
    for (int i = 0; i < 200 && up - lo > 4.0 * std::numeric_limits<double>::epsilon() * up; ++i) {
      const double mid = 0.5 * (lo + up);
      if (fitter.gradient(mid) < 0.0) {
        lo = mid;
      } else {
        up = mid;
      }
    }
    x = 0.5 * (lo + up);
  }

  HyperbolaFit best = fitter.at(x);
  for (double edge : {0.0, hi}) {
    const HyperbolaFit f = fitter.at(edge);
    if (f.sse < best.sse) best = f;
  }
  return best;
}

}  // namespace

double determination_coefficient(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.empty() || truth.size() != predicted.size()) {
    throw DomainError("determination_coefficient needs equal non-empty arrays");
  }
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw UndefinedRError("truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

FittedCurves fit_curves(const ModelProfile& profile, const TimingPairs& timing,
                        const FitOptions& options) {
  profile.validate();
  const int L = profile.layer_count;
  const auto n = static_cast<std::size_t>(L);
  if (all_zero(profile.client_model_bits, n)) {
    throw InvalidProfileError("client_model_bits is all zero");
  }
  if (all_zero(profile.client_flops_fwd, n)) {
    throw InvalidProfileError("client_flops_fwd is all zero");
  }
  if (L < 3) throw FitFailureError("smashed", "need at least two split layers (L >= 3)");
  if (all_zero(profile.smashed_bits, n - 1)) {
    throw InvalidProfileError("smashed_bits is all zero on the split layers");
  }

  FittedCurves out;

  // kappa: through-origin slope of bp on fp.
  {
    double xy = 0.0;
    double xx = 0.0;
    for (const auto& t : timing) {
      if (!(t.fp_seconds > 0.0 && t.bp_seconds > 0.0)) {
        throw FitFailureError("kappa", "timing samples must be positive");
      }
      xy += t.fp_seconds * t.bp_seconds;
      xx += t.fp_seconds * t.fp_seconds;
    }
    if (xx == 0.0) throw FitFailureError("kappa", "timing set is empty");
    out.kappa = xy / xx;
    if (out.kappa < 1.0) {
      throw FitFailureError("kappa", "fitted BP/FP ratio " + std::to_string(out.kappa) + " < 1");
    }
  }

  // alpha: y = alpha l^2.
  {
    double num = 0.0;
    double den = 0.0;
    for (int l = 1; l <= L; ++l) {
      const double l2 = static_cast<double>(l) * l;
      num += l2 * profile.client_model_bits[static_cast<std::size_t>(l - 1)];
      den += l2 * l2;
    }
    out.alpha = std::max(0.0, num / den);
    std::vector<double> pred(n);
    for (int l = 1; l <= L; ++l) pred[static_cast<std::size_t>(l - 1)] = out.alpha * l * l;
    out.r2_size = r2_for("size", profile.client_model_bits, pred);
  }

  // beta: F^tot = F^C (1 + kappa) against beta l (1 + kappa).
  {
    double num = 0.0;
    double den = 0.0;
    for (int l = 1; l <= L; ++l) {
      num += l * profile.client_flops_fwd[static_cast<std::size_t>(l - 1)];
      den += static_cast<double>(l) * l;
    }
    out.beta = num / den;
    if (!(out.beta > 0.0)) throw FitFailureError("flops", "beta is not positive");
    std::vector<double> truth(n);
    std::vector<double> pred(n);
    for (int l = 1; l <= L; ++l) {
      const auto i = static_cast<std::size_t>(l - 1);
      truth[i] = profile.client_flops_fwd[i] * (1.0 + out.kappa);
      pred[i] = out.beta * l * (1.0 + out.kappa);
    }
    out.r2_flops = r2_for("flops", truth, pred);
  }

  // gamma1, gamma2 over the split layers 1..L-1.
  {
    const std::span<const double> y(profile.smashed_bits.data(), n - 1);
    const double hi = options.gamma2_range_factor * L;
    if (!(hi > 0.0) || !(options.gamma2_tolerance > 0.0)) {
      throw DomainError("gamma2 search range and tolerance must be positive");
    }
    const HyperbolaFit h = fit_hyperbola(y, hi, options.gamma2_tolerance);
    if (!(h.gamma1 > 0.0) || !std::isfinite(h.gamma1)) {
      throw FitFailureError("smashed", "gamma1 is not positive");
    }
    out.gamma1 = h.gamma1;
    out.gamma2 = h.gamma2;
    std::vector<double> pred(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      pred[i] = out.gamma1 / (static_cast<double>(i + 1) + out.gamma2);
    }
    out.r2_smashed = r2_for("smashed", y, pred);
  }

  return out;
}

ModelProfile synthesize_profile(const SynthesisParams& p) {
  FittedCurves check;
  check.alpha = p.alpha;
  check.beta = p.beta;
  check.kappa = p.kappa;
  check.gamma1 = p.gamma1;
  check.gamma2 = p.gamma2;
  check.validate();
  if (!(p.alpha > 0.0)) throw DomainError("alpha must be > 0 to synthesize a profile");
  if (p.layer_count < 2) throw DomainError("layer_count must be >= 2");
  if (!(p.noise >= 0.0 && p.noise < 1.0)) throw DomainError("noise must lie in [0, 1)");

  std::mt19937_64 rng(p.seed);
  const auto n = static_cast<std::size_t>(p.layer_count);
  ModelProfile out;
  out.layer_count = p.layer_count;
  out.client_model_bits.resize(n);
  out.client_flops_fwd.resize(n);
  out.smashed_bits.resize(n);
  for (int l = 1; l <= p.layer_count; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    const double ld = l;
    out.client_model_bits[i] = p.alpha * ld * ld * noise_factor(rng, p.noise);
    out.client_flops_fwd[i] = p.beta * ld * noise_factor(rng, p.noise);
    const double s = p.gamma1 / (ld + p.gamma2) * noise_factor(rng, p.noise);
    out.smashed_bits[i] = l < p.layer_count ? s : 0.0;
  }
  for (std::size_t i = 1; i < n; ++i) {
    out.client_model_bits[i] = std::max(out.client_model_bits[i], out.client_model_bits[i - 1]);
    out.client_flops_fwd[i] = std::max(out.client_flops_fwd[i], out.client_flops_fwd[i - 1]);
  }
  out.total_model_bits = out.client_model_bits.back();
  out.total_flops = out.client_flops_fwd.back() * (1.0 + p.kappa);
  return out;
}

TimingPairs synthesize_timing(double kappa, std::size_t count, double noise, std::uint64_t seed) {
  if (!(kappa >= 1.0)) throw DomainError("kappa must be >= 1");
  if (count == 0) throw DomainError("timing count must be positive");
  if (!(noise >= 0.0 && noise < 1.0)) throw DomainError("noise must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  TimingPairs out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double fp = 0.08 + 0.04 * unit_uniform(rng);
    out.push_back({fp, kappa * fp * noise_factor(rng, noise)});
  }
  return out;
}

namespace {

std::vector<double> number_array(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw InvalidProfileError(std::string("profile field '") + key + "' must be an array");
  }
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw InvalidProfileError(std::string(key) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InvalidProfileError(std::string("profile field '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

// Integral values are emitted as JSON integers so the file schema keeps
// integer bit and FLOP counts.
nlohmann::ordered_json number_value(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
    return static_cast<std::int64_t>(v);
  }
  return v;
}

}  // namespace

ModelProfile load_profile(const std::filesystem::path& path) {
  const nlohmann::json j = detail::read_json_file(path);
  if (!j.is_object()) throw InvalidProfileError("profile must be a JSON object");
  ModelProfile p;
  if (!j.contains("layer_count") || !j.at("layer_count").is_number_integer()) {
    throw InvalidProfileError("profile field 'layer_count' must be an integer");
  }
  p.layer_count = j.at("layer_count").get<int>();
  p.client_model_bits = number_array(j, "client_model_bits");
  p.client_flops_fwd = number_array(j, "client_flops_fwd");
  p.smashed_bits = number_array(j, "smashed_bits");
  p.total_model_bits = number_field(j, "total_model_bits");
  p.total_flops = number_field(j, "total_flops");
  p.validate();
  return p;
}

void save_profile(const ModelProfile& profile, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["layer_count"] = profile.layer_count;
  auto arr = [](const std::vector<double>& a) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (double v : a) out.push_back(number_value(v));
    return out;
  };
  j["client_model_bits"] = arr(profile.client_model_bits);
  j["client_flops_fwd"] = arr(profile.client_flops_fwd);
  j["smashed_bits"] = arr(profile.smashed_bits);
  j["total_model_bits"] = number_value(profile.total_model_bits);
  j["total_flops"] = number_value(profile.total_flops);
  detail::write_text_file(path, j.dump(1) + "\n");
}

TimingPairs load_timing(const std::filesystem::path& path) {
  const nlohmann::json j = detail::read_json_file(path);
  if (!j.is_array()) throw InvalidProfileError("timing file must be a JSON array of pairs");
  TimingPairs out;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw InvalidProfileError("timing entries must be [fp_seconds, bp_seconds]");
    }
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

void save_timing(const TimingPairs& timing, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : timing) j.push_back({t.fp_seconds, t.bp_seconds});
  detail::write_text_file(path, j.dump() + "\n");
}

}  // namespace sflplan::profile
