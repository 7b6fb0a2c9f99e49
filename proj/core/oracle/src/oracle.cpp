#include "sflplan/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sflplan::oracle {

double phase_latency(const ClientSpec& client, int l, double f_server, const FittedCurves& curves,
                     const ModelProfile& profile) {
  const int L = profile.layer_count;
  if (l < client.l_min || l > L) throw std::invalid_argument("cut-layer outside [l_min, L]");

  double client_model_bits;
  double fp_client;
  double bp_client;
  double fp_server = 0.0;
  double bp_server = 0.0;
  double smashed = 0.0;
  double gradients = 0.0;
  if (l == L) {
    client_model_bits = profile.total_model_bits;
    // Whole-model forward and backward per sample.
    fp_client = profile.total_flops / (1.0 + curves.kappa);
    bp_client = profile.total_flops - fp_client;
  } else {
    if (!(f_server > 0.0)) throw std::invalid_argument("split session without server compute");
    client_model_bits = curves.alpha * l * l;
    fp_client = curves.beta * l;
    bp_client = curves.kappa * fp_client;
    fp_server = curves.beta * (L - l);
    bp_server = curves.kappa * fp_server;
    smashed = curves.gamma1 / (l + curves.gamma2);
    gradients = smashed;
  }

  const double download_model = client_model_bits / client.rate;
  double per_sample = fp_client / client.f_local;
  per_sample += smashed / client.rate;
  if (l < L) per_sample += fp_server / f_server + bp_server / f_server;
  per_sample += gradients / client.rate;
  per_sample += bp_client / client.f_local;
  const double upload_model = client_model_bits / client.rate;

  const double samples = static_cast<double>(client.epochs) * client.batch;
  return download_model + samples * per_sample + upload_model;
}

ExhaustiveResult exhaustive_cut_layer(const ClientSpec& client, double f_server,
                                      const FittedCurves& curves, const ModelProfile& profile) {
  ExhaustiveResult best{client.l_min, std::numeric_limits<double>::infinity()};
  for (int l = client.l_min; l <= profile.layer_count; ++l) {
    const double t = phase_latency(client, l, f_server, curves, profile);
    if (t < best.latency) best = {l, t};
  }
  return best;
}

GridResult grid_allocation(std::span<const ClientSpec> clients, std::span<const int> cut_layers,
                           const FittedCurves& curves, const ModelProfile& profile, double f_max,
                           int levels) {
  const std::size_t K = clients.size();
  if (K == 0 || K > 4) throw std::invalid_argument("grid oracle supports 1 to 4 clients");
  if (levels < 2) throw std::invalid_argument("grid oracle needs at least 2 levels");
  if (cut_layers.size() != K) throw std::invalid_argument("one cut-layer per client");
  const int L = profile.layer_count;
  const double step = f_max / levels;

  // table[k][i]: latency of client k holding i grid steps.
  std::vector<std::vector<double>> table(K, std::vector<double>(static_cast<std::size_t>(levels) + 1));
  for (std::size_t k = 0; k < K; ++k) {
    const double local = phase_latency(clients[k], L, 0.0, curves, profile);
    for (int i = 0; i <= levels; ++i) {
      table[k][static_cast<std::size_t>(i)] =
          (i == 0 || cut_layers[k] == L)
              ? local
              : phase_latency(clients[k], cut_layers[k], i * step, curves, profile);
    }
  }

  GridResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<int> steps(K, 0);
  // Depth-first over the first K-1 clients; the last client takes the
  // better of nothing and everything left.
  auto recurse = [&](auto&& self, std::size_t k, int remaining, double running_max) -> void {
    if (running_max >= best.objective) return;
    if (k + 1 == K) {
      const double none = table[k][0];
      const double all = table[k][static_cast<std::size_t>(remaining)];
      const int take = all < none ? remaining : 0;
      const double obj = std::max(running_max, std::min(none, all));
      if (obj < best.objective) {
        best.objective = obj;
        steps[k] = take;
        best.allocation.assign(K, 0.0);
        for (std::size_t j = 0; j < K; ++j) best.allocation[j] = steps[j] * step;
      }
      return;
    }
    for (int i = 0; i <= remaining; ++i) {
      steps[k] = i;
      self(self, k + 1, remaining - i, std::max(running_max, table[k][static_cast<std::size_t>(i)]));
    }
    steps[k] = 0;
  };
  recurse(recurse, 0, levels, 0.0);
  return best;
}

JointResult joint_optimum(std::span<const ClientSpec> clients, const FittedCurves& curves,
                          const ModelProfile& profile, double f_max, double rel_tol) {
  if (clients.empty()) throw std::invalid_argument("no clients");
  if (!(f_max > 0.0)) throw std::invalid_argument("budget must be positive");
  const int L = profile.layer_count;
  const std::size_t K = clients.size();
  const double inf = std::numeric_limits<double>::infinity();

  // Split latency is floor + load / f; both read off phase_latency.
  std::vector<double> local(K);
  std::vector<std::vector<double>> floor(K), load(K);
  double hi = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    local[k] = phase_latency(clients[k], L, 0.0, curves, profile);
    hi = std::max(hi, local[k]);
    for (int l = clients[k].l_min; l < L; ++l) {
      const double f0 = phase_latency(clients[k], l, inf, curves, profile);
      floor[k].push_back(f0);
      load[k].push_back(phase_latency(clients[k], l, 1.0, curves, profile) - f0);
    }
  }

  struct Need {
    double total = 0.0;
    std::vector<int> cuts;
    std::vector<double> f;
  };
  auto need = [&](double t) {
    Need n;
    n.cuts.assign(K, L);
    n.f.assign(K, 0.0);
    for (std::size_t k = 0; k < K && n.total < inf; ++k) {
      if (local[k] <= t) continue;
      double best = inf;
      for (std::size_t i = 0; i < floor[k].size(); ++i) {
        if (floor[k][i] >= t) continue;
        const double f = load[k][i] / (t - floor[k][i]);
        if (f < best) {
          best = f;
          n.cuts[k] = clients[k].l_min + static_cast<int>(i);
        }
      }
      n.f[k] = best;
      n.total += best;
    }
    return n;
  };

  double lo = 0.0;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (need(mid).total <= f_max) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const Need n = need(hi);
  return {n.cuts, n.f, hi};
}

double finite_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double second_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

double extrapolated_difference(const std::function<double(double)>& f, double x, double h,
                               double* error) {
  // Ridders: central differences at shrinking steps, Neville-extrapolated to
  // h -> 0; stops once the error estimate starts growing.
  constexpr int kSteps = 10;
  constexpr double kShrink = 1.4;
  constexpr double kShrink2 = kShrink * kShrink;
  std::array<std::array<double, kSteps>, kSteps> a{};
  double best = finite_difference(f, x, h);
  a[0][0] = best;
  double err = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kSteps; ++i) {
    h /= kShrink;
    a[0][i] = finite_difference(f, x, h);
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const double e =
          std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= 2.0 * err) break;
  }
  if (error) *error = err;
  return best;
}

}  // namespace sflplan::oracle
