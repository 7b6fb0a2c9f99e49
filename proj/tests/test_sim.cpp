#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "scenario.hpp"
#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"
#include "sflplan/optimizer.hpp"
#include "sflplan/sim.hpp"
#include "support.hpp"

namespace sflplan {
namespace {

using testing::rel_diff;

struct Fixture {
  testing::AllocInstance in;
  optimizer::Plan plan;
};

Fixture planned(std::uint64_t seed, int K) {
  testing::Rng rng(seed);
  Fixture f{testing::random_alloc_instance(rng, K), {}};
  f.plan = optimizer::optimize(f.in.clients, f.in.curves, f.in.profile, f.in.server);
  return f;
}

TEST(Simulate, SingleLocalClientHasThreeEventsAndAggregate) {
  testing::Rng rng(139);
  auto in = testing::random_alloc_instance(rng, 1);
  optimizer::Plan plan;
  plan.client_ids = {in.clients[0].id};
  plan.cut_layers = {in.profile.layer_count};
  plan.f_server = {0.0};
  const auto trace = sim::simulate_round(plan, in.clients, in.curves, in.profile);
  ASSERT_EQ(trace.events.size(), 4u);
  EXPECT_EQ(trace.events[0].phase, sim::Phase::distribute);
  EXPECT_EQ(trace.events[1].phase, sim::Phase::client_fp);
  EXPECT_EQ(trace.events[2].phase, sim::Phase::upload_model);
  EXPECT_EQ(trace.events[3].phase, sim::Phase::aggregate);
  const double local = latency::latency_fedavg(in.clients[0], in.profile.total_model_bits,
                                               in.profile.total_flops)
                           .total_s;
  EXPECT_LE(rel_diff(trace.round_latency_s, local), 1e-12);
}

TEST(Simulate, RoundLatencyEqualsObjective) {
  for (std::uint64_t seed = 140; seed < 170; ++seed) {
    const auto f = planned(seed, static_cast<int>(seed % 10) + 1);
    const auto trace = sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile);
    EXPECT_LE(rel_diff(trace.round_latency_s, f.plan.objective), 1e-9) << seed;
  }
}

TEST(Simulate, PhasesAreContiguousAndOrdered) {
  const auto f = planned(171, 8);
  const auto trace = sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile);
  std::map<std::string, std::vector<sim::Event>> by_client;
  for (const auto& e : trace.events) {
    if (e.phase != sim::Phase::aggregate) by_client[e.client_id].push_back(e);
  }
  ASSERT_EQ(by_client.size(), f.in.clients.size());
  const std::vector<sim::Phase> split_order{
      sim::Phase::distribute,     sim::Phase::client_fp, sim::Phase::upload_smashed,
      sim::Phase::server_fp,      sim::Phase::server_bp, sim::Phase::download_grads,
      sim::Phase::client_bp,      sim::Phase::upload_model};
  for (std::size_t k = 0; k < f.in.clients.size(); ++k) {
    const auto& events = by_client[f.in.clients[k].id];
    EXPECT_EQ(events.front().start_s, 0.0);
    for (std::size_t i = 1; i < events.size(); ++i) {
      EXPECT_EQ(events[i].start_s, events[i - 1].end_s);
      EXPECT_GE(events[i].end_s, events[i].start_s);
    }
    if (f.plan.cut_layers[k] < f.in.profile.layer_count) {
      ASSERT_EQ(events.size(), split_order.size());
      for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].phase, split_order[i]);
    } else {
      for (const auto& e : events) {
        EXPECT_NE(e.phase, sim::Phase::server_fp);
        EXPECT_NE(e.phase, sim::Phase::upload_smashed);
      }
    }
  }
}

TEST(Simulate, AggregationWaitsForEveryUpload) {
  const auto f = planned(173, 10);
  const auto trace = sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile);
  const auto& agg = trace.events.back();
  ASSERT_EQ(agg.phase, sim::Phase::aggregate);
  for (const auto& e : trace.events) {
    if (e.phase == sim::Phase::upload_model) EXPECT_LE(e.end_s, agg.start_s);
  }
  EXPECT_DOUBLE_EQ(agg.start_s, trace.round_latency_s);
  EXPECT_DOUBLE_EQ(*std::max_element(trace.client_finish_s.begin(), trace.client_finish_s.end()),
                   trace.round_latency_s);
}

TEST(Simulate, AggregationWeightsAreNormalisedDatasetShares) {
  const auto f = planned(179, 7);
  const auto trace = sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile);
  double total_n = 0.0;
  for (const auto& c : f.in.clients) total_n += c.dataset_size;
  double sum = 0.0;
  for (std::size_t k = 0; k < trace.client_ids.size(); ++k) {
    sum += trace.aggregation_weights[k];
    EXPECT_DOUBLE_EQ(trace.aggregation_weights[k], f.in.clients[k].dataset_size / total_n);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Simulate, ExpandedModeKeepsTheRoundLatency) {
  const auto f = planned(181, 4);
  sim::SimOptions expanded;
  expanded.expand_epochs = true;
  const auto a = sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile);
  const auto b = sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile, expanded);
  EXPECT_GE(b.events.size(), a.events.size());
  EXPECT_LE(rel_diff(a.round_latency_s, b.round_latency_s), 1e-12);
}

TEST(Simulate, ExpandedModeIsCapped) {
  const auto f = planned(191, 4);
  sim::SimOptions expanded;
  expanded.expand_epochs = true;
  expanded.max_events = 10;
  EXPECT_THROW(sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile, expanded),
               DomainError);
}

TEST(Simulate, MissingAllocationIsInconsistent) {
  auto f = planned(193, 3);
  f.plan.cut_layers[0] = 1;
  f.plan.f_server[0] = 0.0;
  EXPECT_THROW(sim::simulate_round(f.plan, f.in.clients, f.in.curves, f.in.profile),
               ValidationError);
}

TEST(Simulate, Fig7ServedClientsFinishTogether) {
  const auto ls = cli::load_scenario(testing::fig7_scenario());
  const auto& s = ls.scenario;
  const auto plan = optimizer::optimize(s.clients, ls.curves, ls.profile, s.server);
  const auto trace = sim::simulate_round(plan, s.clients, ls.curves, ls.profile);
  double first = -1.0;
  std::size_t served = 0;
  for (std::size_t k = 0; k < s.clients.size(); ++k) {
    if (!(plan.f_server[k] > 0.0)) continue;
    ++served;
    if (first < 0.0) first = trace.client_finish_s[k];
    EXPECT_LE(rel_diff(trace.client_finish_s[k], first), 1e-6);
  }
  EXPECT_GT(served, 1u);
}

TEST(Campaign, RoundsAccumulate) {
  const auto f = planned(197, 5);
  const auto one = sim::simulate_campaign(f.plan, f.in.clients, f.in.curves, f.in.profile, 1);
  EXPECT_EQ(one.cumulative_s, one.rounds.front().round_latency_s);
  const auto sixty = sim::simulate_campaign(f.plan, f.in.clients, f.in.curves, f.in.profile, 60);
  ASSERT_EQ(sixty.rounds.size(), 60u);
  double sum = 0.0;
  for (const auto& r : sixty.rounds) sum += r.round_latency_s;
  EXPECT_EQ(sixty.cumulative_s, sum);
  EXPECT_LE(rel_diff(sixty.cumulative_s, 60.0 * one.cumulative_s), 1e-12);
  EXPECT_THROW(sim::simulate_campaign(f.plan, f.in.clients, f.in.curves, f.in.profile, 0),
               DomainError);
}

TEST(Csv, TraceHeaderAndEscaping) {
  testing::Rng rng(199);
  auto in = testing::random_alloc_instance(rng, 1);
  in.clients[0].id = "a,\"b\"";
  optimizer::Plan plan;
  plan.client_ids = {in.clients[0].id};
  plan.cut_layers = {in.profile.layer_count};
  plan.f_server = {0.0};
  const auto trace = sim::simulate_round(plan, in.clients, in.curves, in.profile);
  const auto csv = sim::trace_csv(trace);
  EXPECT_EQ(csv.rfind("client_id,phase,start_s,end_s\r\n", 0), 0u);
  EXPECT_NE(csv.find("\"a,\"\"b\"\"\",distribute,0,"), std::string::npos);
  const auto summary = sim::summary_csv(trace, plan);
  EXPECT_NE(summary.find("total_s"), std::string::npos);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2);
}

}  // namespace
}  // namespace sflplan
