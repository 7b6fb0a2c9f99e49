#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sflplan/alloc.hpp"
#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"
#include "sflplan/oracle.hpp"
#include "support.hpp"

namespace sflplan {
namespace {

using testing::rel_diff;

ModelProfile small_profile(FittedCurves& c) {
  c.alpha = 1e4;
  c.beta = 1e9;
  c.kappa = 2.0;
  c.gamma1 = 1e6;
  c.gamma2 = 1.0;
  return testing::profile_from_curves(c, 30);
}

ClientSpec make_client(const std::string& id, double f_local, double rate) {
  ClientSpec c;
  c.id = id;
  c.f_local = f_local;
  c.rate = rate;
  c.batch = 32;
  c.epochs = 20;
  return c;
}

double local_latency(const ClientSpec& c, const ModelProfile& p) {
  return latency::latency_fedavg(c, p.total_model_bits, p.total_flops).total_s;
}

TEST(Order, StableForEqualLatency) {
  FittedCurves c;
  const auto p = small_profile(c);
  const std::vector<ClientSpec> clients{make_client("b", 1e11, 1e7), make_client("a", 1e11, 1e7)};
  const auto order = alloc::sort_by_local_latency(clients, p);
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 1}));
}

TEST(Order, IncreasingInputIsIdentity) {
  FittedCurves c;
  const auto p = small_profile(c);
  std::vector<ClientSpec> clients;
  for (int k = 0; k < 6; ++k) clients.push_back(make_client("c" + std::to_string(k), 1e12 / (k + 1), 1e7));
  const auto order = alloc::sort_by_local_latency(clients, p);
  std::vector<std::size_t> identity(6);
  std::iota(identity.begin(), identity.end(), 0);
  EXPECT_EQ(order, identity);
}

TEST(Order, RandomInstancesAreSorted) {
  testing::Rng rng(61);
  for (int i = 0; i < 50; ++i) {
    auto in = testing::random_alloc_instance(rng, 12);
    const auto order = alloc::sort_by_local_latency(in.clients, in.profile);
    for (std::size_t j = 1; j < order.size(); ++j) {
      EXPECT_LE(local_latency(in.clients[order[j - 1]], in.profile),
                local_latency(in.clients[order[j]], in.profile));
    }
  }
}

TEST(ClosedForm, InvertsLatencySplit) {
  testing::Rng rng(67);
  for (int i = 0; i < 200; ++i) {
    const auto in = testing::random_cut_instance(rng);
    const int L = in.profile.layer_count;
    if (in.client.l_min >= L) continue;
    const int l = rng.integer(in.client.l_min, L - 1);
    const double t = latency::latency_split(in.client, l, in.f_server, in.curves, L).total_s;
    const double f = alloc::closed_form_f_server(in.client, l, in.curves, in.profile, t);
    EXPECT_LE(rel_diff(f, in.f_server), 1e-9) << i;
  }
}

TEST(ClosedForm, AgreesWithBisectionInversion) {
  testing::Rng rng(71);
  for (int i = 0; i < 100; ++i) {
    const auto in = testing::random_cut_instance(rng);
    const int L = in.profile.layer_count;
    if (in.client.l_min >= L) continue;
    const int l = in.client.l_min;
    const double floor = latency::server_independent_floor(in.client, l, in.curves);
    const double target = floor * rng.uniform(1.01, 3.0);
    const double f = alloc::closed_form_f_server(in.client, l, in.curves, in.profile, target);
    // Geometric bisection on f for latency_split(f) = target.
    double lo = 1e-6;
    double hi = 1e30;
    for (int it = 0; it < 400; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (latency::latency_split(in.client, l, mid, in.curves, L).total_s > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    EXPECT_LE(rel_diff(f, hi), 1e-9) << i;
  }
}

TEST(ClosedForm, PoleAtTheFloor) {
  FittedCurves c;
  const auto p = small_profile(c);
  const auto client = make_client("a", 1e11, 1e7);
  const double floor = latency::server_independent_floor(client, 5, c);
  EXPECT_THROW(alloc::closed_form_f_server(client, 5, c, p, floor), InfeasibleTargetError);
  EXPECT_THROW(alloc::closed_form_f_server(client, 5, c, p, floor * 0.5), InfeasibleTargetError);
  double previous = 0.0;
  for (const double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double f = alloc::closed_form_f_server(client, 5, c, p, floor * (1 + eps));
    EXPECT_GT(f, previous);
    previous = f;
  }
  EXPECT_GT(previous, 1e15);
}

TEST(TTheta, SingleClientClosedForm) {
  FittedCurves c;
  const auto p = small_profile(c);
  const std::vector<ClientSpec> one{make_client("a", 1e11, 1e7)};
  const std::vector<int> cuts{7};
  const double f_max = 3e12;
  const double t = alloc::solve_t_theta(one, cuts, c, p, f_max);
  const double expected = latency::server_independent_floor(one[0], 7, c) +
                          latency::server_load(one[0], 7, c, 30) / f_max;
  EXPECT_LE(rel_diff(t, expected), 1e-12);
}

TEST(TTheta, IdenticalClientsSplitEvenly) {
  FittedCurves c;
  const auto p = small_profile(c);
  const std::vector<ClientSpec> two{make_client("a", 1e11, 1e7), make_client("b", 1e11, 1e7)};
  const std::vector<int> cuts{6, 6};
  ServerSpec s{2e12};
  const auto a = alloc::allocate(two, cuts, c, p, s);
  ASSERT_EQ(a.served_count(), 2u);
  EXPECT_LE(rel_diff(a.f_server[0], 1e12), 1e-9);
  EXPECT_LE(rel_diff(a.f_server[1], 1e12), 1e-9);
}

TEST(TTheta, BudgetEquationHolds) {
  testing::Rng rng(73);
  for (int i = 0; i < 200; ++i) {
    auto in = testing::random_alloc_instance(rng, rng.integer(1, 8));
    std::vector<ClientSpec> served;
    std::vector<int> cuts;
    for (std::size_t k = 0; k < in.clients.size(); ++k) {
      if (in.cut_layers[k] < in.profile.layer_count) {
        served.push_back(in.clients[k]);
        cuts.push_back(in.cut_layers[k]);
      }
    }
    if (served.empty()) continue;
    const double t = alloc::solve_t_theta(served, cuts, in.curves, in.profile, in.server.f_max);
    const double h = alloc::budget_needed(served, cuts, in.curves, in.profile, t);
    EXPECT_LE(h, in.server.f_max * (1 + 1e-12));
    EXPECT_LE(rel_diff(h, in.server.f_max), 1e-6) << i;
    // Independent refinement: a grid of T values around the root brackets it.
    double max_floor = 0.0;
    for (std::size_t k = 0; k < served.size(); ++k) {
      max_floor = std::max(max_floor,
                           latency::server_independent_floor(served[k], cuts[k], in.curves));
    }
    const double below = t - 1e-6 * (t - max_floor);
    EXPECT_GT(alloc::budget_needed(served, cuts, in.curves, in.profile, below), in.server.f_max);
  }
}

TEST(BudgetNeeded, DerivativeSignsAndFiniteDifferences) {
  testing::Rng rng(79);
  for (int i = 0; i < 200; ++i) {
    auto in = testing::random_alloc_instance(rng, rng.integer(1, 6));
    std::vector<ClientSpec> served;
    std::vector<int> cuts;
    double max_floor = 0.0;
    for (std::size_t k = 0; k < in.clients.size(); ++k) {
      if (in.cut_layers[k] >= in.profile.layer_count) continue;
      served.push_back(in.clients[k]);
      cuts.push_back(in.cut_layers[k]);
      max_floor = std::max(max_floor, latency::server_independent_floor(
                                          in.clients[k], in.cut_layers[k], in.curves));
    }
    if (served.empty()) continue;
    const double t = max_floor * (1.0 + rng.log_uniform(1e-3, 10.0));
    auto H = [&](double x) { return alloc::budget_needed(served, cuts, in.curves, in.profile, x); };
    auto dH = [&](double x) {
      return alloc::budget_needed_dT(served, cuts, in.curves, in.profile, x);
    };
    const double h = 1e-4 * (t - max_floor);
    EXPECT_LT(dH(t), 0.0);
    EXPECT_GT(alloc::budget_needed_d2T(served, cuts, in.curves, in.profile, t), 0.0);
    EXPECT_LE(rel_diff(dH(t), oracle::finite_difference(H, t, h)), 1e-6) << i;
    EXPECT_LE(rel_diff(alloc::budget_needed_d2T(served, cuts, in.curves, in.profile, t),
                       oracle::finite_difference(dH, t, h)),
              1e-6)
        << i;
  }
}

void expect_allocation_invariants(const alloc::AllocationResult& a, const ServerSpec& s) {
  double used = 0.0;
  double max_latency = 0.0;
  for (std::size_t k = 0; k < a.f_server.size(); ++k) {
    used += a.f_server[k];
    max_latency = std::max(max_latency, a.per_client_latency[k]);
    if (a.served[k]) {
      EXPECT_LE(rel_diff(a.per_client_latency[k], a.t_theta), 1e-6);
    } else {
      EXPECT_EQ(a.f_server[k], 0.0);
      EXPECT_LE(a.per_client_latency[k], a.objective * (1 + 1e-12));
    }
  }
  EXPECT_DOUBLE_EQ(max_latency, a.objective);
  if (a.served_count() > 0) EXPECT_LE(rel_diff(used, s.f_max), 1e-6);
}

TEST(Allocate, InvariantsOnRandomInstances) {
  testing::Rng rng(83);
  for (int i = 0; i < 300; ++i) {
    auto in = testing::random_alloc_instance(rng, rng.integer(1, 12));
    const auto a = alloc::allocate(in.clients, in.cut_layers, in.curves, in.profile, in.server);
    expect_allocation_invariants(a, in.server);
    // Served clients are exactly a suffix of the order, minus local-only cuts.
    const std::size_t first = static_cast<std::size_t>(a.theta - 1);
    for (std::size_t j = 0; j < a.order.size(); ++j) {
      const std::size_t k = a.order[j];
      if (j < first || in.cut_layers[k] == in.profile.layer_count) {
        EXPECT_FALSE(a.served[k]);
      } else {
        EXPECT_TRUE(a.served[k]);
      }
    }
  }
}

TEST(Allocate, NoWorseThanGridOracle) {
  testing::Rng rng(89);
  for (int i = 0; i < 30; ++i) {
    auto in = testing::random_alloc_instance(rng, rng.integer(1, 3));
    const auto a = alloc::allocate(in.clients, in.cut_layers, in.curves, in.profile, in.server);
    const auto g = oracle::grid_allocation(in.clients, in.cut_layers, in.curves, in.profile,
                                           in.server.f_max, 100);
    EXPECT_LE(a.objective, g.objective * (1 + 1e-9)) << i;
  }
}

TEST(Allocate, TinyBudgetIsAllLocal) {
  FittedCurves c;
  const auto p = small_profile(c);
  std::vector<ClientSpec> clients{make_client("a", 1e11, 1e7), make_client("b", 5e10, 1e7),
                                  make_client("c", 2e11, 1e7)};
  const std::vector<int> cuts{5, 5, 5};
  const auto a = alloc::allocate(clients, cuts, c, p, ServerSpec{1.0});
  double worst = 0.0;
  for (const auto& cl : clients) worst = std::max(worst, local_latency(cl, p));
  EXPECT_EQ(a.served_count(), 0u);
  EXPECT_EQ(a.theta, 4);
  EXPECT_DOUBLE_EQ(a.objective, worst);
}

TEST(Allocate, HugeBudgetServesEverySplitClient) {
  FittedCurves c;
  const auto p = small_profile(c);
  std::vector<ClientSpec> clients{make_client("a", 1e11, 1e7), make_client("b", 5e10, 1e7),
                                  make_client("c", 2e11, 1e7)};
  const std::vector<int> cuts{5, 30, 8};
  const auto a = alloc::allocate(clients, cuts, c, p, ServerSpec{1e20});
  EXPECT_TRUE(a.served[0]);
  EXPECT_FALSE(a.served[1]);
  EXPECT_TRUE(a.served[2]);
  const double limit = std::max({latency::server_independent_floor(clients[0], 5, c),
                                 latency::server_independent_floor(clients[2], 8, c),
                                 local_latency(clients[1], p)});
  EXPECT_LE(rel_diff(a.objective, limit), 1e-6);
}

TEST(Allocate, TThetaConvexAndNonIncreasingInBudget) {
  testing::Rng rng(97);
  for (int i = 0; i < 40; ++i) {
    auto in = testing::random_alloc_instance(rng, rng.integer(2, 8));
    for (auto& c : in.clients) c.l_min = 1;
    for (auto& l : in.cut_layers) l = std::min(l, in.profile.layer_count - 1);
    std::vector<double> budgets;
    for (int j = 0; j <= 20; ++j) budgets.push_back(in.server.f_max * std::pow(1.3, j));
    std::vector<double> t;
    for (double f : budgets) {
      t.push_back(alloc::solve_t_theta(in.clients, in.cut_layers, in.curves, in.profile, f));
    }
    for (std::size_t j = 1; j < t.size(); ++j) EXPECT_LE(t[j], t[j - 1] * (1 + 1e-12));
    for (std::size_t j = 2; j < t.size(); ++j) {
      const double s1 = (t[j - 1] - t[j - 2]) / (budgets[j - 1] - budgets[j - 2]);
      const double s2 = (t[j] - t[j - 1]) / (budgets[j] - budgets[j - 1]);
      EXPECT_GE(s2 - s1, -1e-9 * std::abs(s1)) << i << " " << j;
    }
  }
}

TEST(Allocate, LatencyConvexInOwnAllocation) {
  testing::Rng rng(101);
  for (int i = 0; i < 100; ++i) {
    const auto in = testing::random_cut_instance(rng);
    const int L = in.profile.layer_count;
    if (in.client.l_min >= L) continue;
    auto T = [&](double f) {
      return latency::latency_split(in.client, in.client.l_min, f, in.curves, L).total_s;
    };
    const double f = in.f_server;
    EXPECT_GT(oracle::second_difference(T, f, 1e-2 * f), 0.0);
  }
}

TEST(Allocate, MismatchedCutsAreRejected) {
  FittedCurves c;
  const auto p = small_profile(c);
  std::vector<ClientSpec> clients{make_client("a", 1e11, 1e7)};
  const std::vector<int> cuts{5, 6};
  EXPECT_ANY_THROW(alloc::allocate(clients, cuts, c, p, ServerSpec{1e12}));
}

}  // namespace
}  // namespace sflplan
