#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "sflplan/types.hpp"

namespace sflplan::profile {

struct FitOptions {
  // gamma2 is searched on [0, gamma2_range_factor * L].
  double gamma2_range_factor = 10.0;
  double gamma2_tolerance = 1e-6;
};

/// Least-squares fits of the per-layer regression curves.
///
/// alpha and beta are through-origin fits against l^2 and l; kappa is the
/// through-origin slope of BP time on FP time; (gamma1, gamma2) minimise
/// the squared error of gamma1 / (l + gamma2) over the split layers
/// 1..L-1, with gamma1 profiled out in closed form and gamma2 found by
/// golden-section search followed by a gradient bisection polish.
FittedCurves fit_curves(const ModelProfile& profile, const TimingPairs& timing,
                        const FitOptions& options = {});

/// 1 - SS_res / SS_tot with SS_tot taken about the mean of `truth`.
double determination_coefficient(std::span<const double> truth, std::span<const double> predicted);

struct SynthesisParams {
  double alpha = 0.0;
  double beta = 0.0;
  double kappa = 1.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  int layer_count = 0;
  double noise = 0.10;  // multiplicative amplitude, each entry scaled by U[1-noise, 1+noise]
  std::uint64_t seed = 0;
};

/// Deterministic synthetic profile following the regression curves with
/// bounded multiplicative noise. Monotone arrays are repaired by running
/// maximum; the smashed-data size at l = L is zero.
ModelProfile synthesize_profile(const SynthesisParams& params);

/// Synthetic FP/BP timing samples with bp ~ kappa * fp.
TimingPairs synthesize_timing(double kappa, std::size_t count, double noise, std::uint64_t seed);

// JSON file I/O. Malformed JSON raises ParseError carrying the byte offset
// reported by the parser; well-formed files with bad content raise
// InvalidProfileError.
ModelProfile load_profile(const std::filesystem::path& path);
void save_profile(const ModelProfile& profile, const std::filesystem::path& path);
TimingPairs load_timing(const std::filesystem::path& path);
void save_timing(const TimingPairs& timing, const std::filesystem::path& path);

}  // namespace sflplan::profile
