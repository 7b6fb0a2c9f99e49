#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sflplan/types.hpp"

namespace sflplan::cutlayer {

struct SelectOptions {
  // Literal rounding rule: floor of the stationary point only, and a
  // falling derivative at L maps straight to L.
  bool strict_paper_mode = false;
};

struct SelectionStats {
  std::size_t stationarity_solves = 0;
  std::size_t bisection_fallbacks = 0;
  std::size_t latency_evaluations = 0;
};

enum class SelectionCase {
  left_boundary,   // dT/dl > 0 at l_min
  right_boundary,  // dT/dl < 0 at L
  interior,        // sign change on [l_min, L]
  single_layer,    // l_min == L
};

SelectionCase classify(const ClientSpec& client, double f_server, const FittedCurves& curves,
                       int layer_count);

/// Root of dT/dl = 0 on [l_min, L] from the cubic
///   (4 alpha / r) l (l + g2)^2 + I|B| beta (1+kappa) (1/f^C - 1/f^S) (l + g2)^2
///     - 2 g1 I|B| / r = 0
/// solved with Cardano's formula. Falls back to bisection on dT/dl when no
/// Cardano root lands in range with a small residual.
/// Throws CaseMismatchError unless dT/dl(l_min) <= 0 <= dT/dl(L).
double solve_stationarity(const ClientSpec& client, double f_server, const FittedCurves& curves,
                          int layer_count, SelectionStats* stats = nullptr);

/// Bisection on the monotone derivative; same preconditions as above.
double stationarity_bisection(const ClientSpec& client, double f_server,
                              const FittedCurves& curves, int layer_count);

/// Optimal integer cut-layer for one client at a fixed server allocation
/// (f_server > 0). The boundary cases follow the sign of dT/dl at l_min and
/// L; in the interior case the floor and ceiling of the stationary point
/// are compared. The local-only branch l = L is always a candidate, and
/// ties go to the smaller layer.
int select_cut_layer(const ClientSpec& client, double f_server, const FittedCurves& curves,
                     const ModelProfile& profile, const SelectOptions& options = {},
                     SelectionStats* stats = nullptr);

/// Per-client selection; `f_server[k]` pairs with `clients[k]`.
std::vector<int> select_cut_layers(std::span<const ClientSpec> clients,
                                   std::span<const double> f_server, const FittedCurves& curves,
                                   const ModelProfile& profile, const SelectOptions& options = {},
                                   SelectionStats* stats = nullptr);

}  // namespace sflplan::cutlayer
