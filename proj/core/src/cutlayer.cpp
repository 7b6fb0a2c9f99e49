#include "sflplan/cutlayer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sflplan/cubic.hpp"
#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"

namespace sflplan::cutlayer {

namespace {

struct Guards {
  double at_min;
  double at_max;
};

Guards boundary_derivatives(const ClientSpec& client, double f_server, const FittedCurves& curves,
                            int L) {
  return {latency::dT_dl(client, client.l_min, f_server, curves, L),
          latency::dT_dl(client, L, f_server, curves, L)};
}

void require_interior(const Guards& g, const ClientSpec& client) {
  if (!(g.at_min <= 0.0 && g.at_max >= 0.0)) {
    throw CaseMismatchError("dT/dl does not change sign on [l_min, L] for client " + client.id +
                            " (route boundary cases first)");
  }
}

// Magnitude of the individual terms of dT/dl, used to judge residuals.
double derivative_scale(const ClientSpec& client, double l, double f_server,
                        const FittedCurves& c) {
  const double ib = client.samples_per_session();
  const double u = l + c.gamma2;
  return 4.0 * c.alpha * l / client.rate +
         ib * c.beta * (1.0 + c.kappa) * (1.0 / client.f_local + 1.0 / f_server) +
         ib * 2.0 * c.gamma1 / (client.rate * u * u);
}

}  // namespace

SelectionCase classify(const ClientSpec& client, double f_server, const FittedCurves& curves,
                       int layer_count) {
  if (client.l_min == layer_count) return SelectionCase::single_layer;
  const Guards g = boundary_derivatives(client, f_server, curves, layer_count);
  if (g.at_min > 0.0) return SelectionCase::left_boundary;
  if (g.at_max < 0.0) return SelectionCase::right_boundary;
  return SelectionCase::interior;
}

double stationarity_bisection(const ClientSpec& client, double f_server,
                              const FittedCurves& curves, int layer_count) {
  require_interior(boundary_derivatives(client, f_server, curves, layer_count), client);
  double lo = client.l_min;
  double hi = layer_count;
  for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (latency::dT_dl(client, mid, f_server, curves, layer_count) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double solve_stationarity(const ClientSpec& client, double f_server, const FittedCurves& curves,
                          int layer_count, SelectionStats* stats) {
  const Guards g = boundary_derivatives(client, f_server, curves, layer_count);
  require_interior(g, client);
  if (stats != nullptr) ++stats->stationarity_solves;

  const double lo = client.l_min;
  const double hi = layer_count;
  if (g.at_min == 0.0) return lo;
  if (g.at_max == 0.0) return hi;

  const double ib = client.samples_per_session();
  const double a = 4.0 * curves.alpha / client.rate;
  const double c = ib * curves.beta * (1.0 + curves.kappa) * (1.0 / client.f_local - 1.0 / f_server);
  const double d = 2.0 * curves.gamma1 * ib / client.rate;

  // In u = l + gamma2: a u^3 + (c - a gamma2) u^2 - d = 0.
  std::vector<double> candidates;
  if (a > 0.0) {
    for (double u : cubic_real_roots(a, c - a * curves.gamma2, 0.0, -d)) {
      candidates.push_back(u - curves.gamma2);
    }
  } else if (c > 0.0) {
    candidates.push_back(std::sqrt(d / c) - curves.gamma2);
  }

  const double slack = 1e-9 * hi;
  double best = std::numeric_limits<double>::quiet_NaN();
  double best_residual = std::numeric_limits<double>::infinity();
  for (double x : candidates) {
    if (!std::isfinite(x) || x < lo - slack || x > hi + slack) continue;
    x = std::clamp(x, lo, hi);
    // One guarded Newton step removes cancellation error from the closed form.
    const double fx = latency::dT_dl(client, x, f_server, curves, layer_count);
    const double step = fx / latency::d2T_dl2(client, x, curves, layer_count);
    const double polished = std::clamp(x - step, lo, hi);
    const double fp = latency::dT_dl(client, polished, f_server, curves, layer_count);
    if (std::abs(fp) <= std::abs(fx)) x = polished;
    // Among numerically duplicated roots keep the - to + crossing, i.e. the
    // smallest residual of the monotone derivative.
    const double residual = std::abs(latency::dT_dl(client, x, f_server, curves, layer_count));
    if (residual < best_residual) {
      best_residual = residual;
      best = x;
    }
  }

  if (std::isfinite(best) &&
      best_residual <= 1e-9 * derivative_scale(client, best, f_server, curves)) {
    return best;
  }
  if (stats != nullptr) ++stats->bisection_fallbacks;
  return stationarity_bisection(client, f_server, curves, layer_count);
}

int select_cut_layer(const ClientSpec& client, double f_server, const FittedCurves& curves,
                     const ModelProfile& profile, const SelectOptions& options,
                     SelectionStats* stats) {
  const int L = profile.layer_count;
  client.validate(L);
  if (!(f_server > 0.0)) {
    throw DomainError("select_cut_layer needs a positive server allocation (client " + client.id +
                      ")");
  }

  int candidates[3];
  int count = 0;
  switch (classify(client, f_server, curves, L)) {
    case SelectionCase::single_layer:
      return L;
    case SelectionCase::left_boundary:
      candidates[count++] = client.l_min;
      break;
    case SelectionCase::right_boundary:
      // The split branch is decreasing up to L; its best integer is L - 1.
      if (!options.strict_paper_mode && L - 1 >= client.l_min) candidates[count++] = L - 1;
      break;
    case SelectionCase::interior: {
      const double root = solve_stationarity(client, f_server, curves, L, stats);
      const int fl = std::max(client.l_min, static_cast<int>(std::floor(root)));
      candidates[count++] = fl;
      if (!options.strict_paper_mode) {
        const int cl = std::min(L, static_cast<int>(std::ceil(root)));
        if (cl != fl) candidates[count++] = cl;
      }
      break;
    }
  }
  candidates[count++] = L;

  int best_l = candidates[0];
  double best_t = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const int l = candidates[i];
    const double t = latency::latency_piecewise_total(client, l, f_server, curves, profile);
    if (stats != nullptr) ++stats->latency_evaluations;
    if (t < best_t || (t == best_t && l < best_l)) {
      best_t = t;
      best_l = l;
    }
  }
  return best_l;
}

std::vector<int> select_cut_layers(std::span<const ClientSpec> clients,
                                   std::span<const double> f_server, const FittedCurves& curves,
                                   const ModelProfile& profile, const SelectOptions& options,
                                   SelectionStats* stats) {
  if (clients.size() != f_server.size()) {
    throw ValidationError("one server allocation per client is required");
  }
  std::vector<int> out;
  out.reserve(clients.size());
  for (std::size_t k = 0; k < clients.size(); ++k) {
    out.push_back(select_cut_layer(clients[k], f_server[k], curves, profile, options, stats));
  }
  return out;
}

}  // namespace sflplan::cutlayer
