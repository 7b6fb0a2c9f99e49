#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "scenario.hpp"
#include "sflplan/alloc.hpp"
#include "sflplan/error.hpp"
#include "sflplan/latency.hpp"
#include "sflplan/profile.hpp"
#include "sflplan/sim.hpp"

namespace sflplan::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kSimTolerance = 1e-9;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte), e.byte);
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  auto stem = p.parent_path() / p.stem();
  return stem.string() + suffix;
}

// Maps the error hierarchy onto the exit-code contract. Validation errors
// are input errors unless the caller has already loaded consistent inputs.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    for (const auto& line : e.diagnostics()) err << "  " << line << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleTargetError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const FitFailureError& e) {
    err << "fit failed for curve " << e.curve() << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

optimizer::Options apply(optimizer::Options options, const OptimizerOverrides& o) {
  if (o.strict_paper_mode) options.strict_paper_mode = true;
  if (o.max_iters) options.max_iters = *o.max_iters;
  if (o.conv_tol) options.conv_tol = *o.conv_tol;
  if (options.max_iters < 1 || !(options.conv_tol > 0.0)) {
    throw ValidationError("max-iters and conv-tol must be positive");
  }
  return options;
}

ordered_json breakdown_json(const LatencyBreakdown& b) {
  ordered_json j;
  j["model_transfer_s"] = b.model_transfer_s;
  j["client_fp_s"] = b.client_fp_s;
  j["smashed_up_s"] = b.smashed_up_s;
  j["server_fp_s"] = b.server_fp_s;
  j["server_bp_s"] = b.server_bp_s;
  j["grads_down_s"] = b.grads_down_s;
  j["client_bp_s"] = b.client_bp_s;
  j["total_s"] = b.total_s;
  return j;
}

std::string breakdown_csv_fields(const LatencyBreakdown& b) {
  return fmt::format("{},{},{},{},{},{},{},{}", b.model_transfer_s, b.client_fp_s, b.smashed_up_s,
                     b.server_fp_s, b.server_bp_s, b.grads_down_s, b.client_bp_s, b.total_s);
}

constexpr const char* kBreakdownHeader =
    "model_transfer_s,client_fp_s,smashed_up_s,server_fp_s,server_bp_s,grads_down_s,client_bp_s,"
    "total_s";

// Client ids in scenario files are free text.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Rows ordered by local-only latency, which is how the served suffix and
// unserved prefix read off directly.
std::string plan_csv(const optimizer::Plan& plan, const LoadedScenario& ls) {
  const auto order = alloc::sort_by_local_latency(ls.scenario.clients, ls.profile);
  std::string out = fmt::format("rank,client_id,cut_layer,f_server_gflops,served,{}\r\n",
                                kBreakdownHeader);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t k = order[r];
    out += fmt::format("{},{},{},{},{},{}\r\n", r + 1, csv_field(plan.client_ids[k]),
                       plan.cut_layers[k], plan.f_server[k] / kFlopsPerGiga,
                       plan.f_server[k] > 0.0 ? 1 : 0, breakdown_csv_fields(plan.per_client[k]));
  }
  return out;
}

}  // namespace

ordered_json plan_to_json(const optimizer::Plan& plan) {
  ordered_json j;
  j["clients"] = plan.client_ids;
  ordered_json cuts = ordered_json::object();
  ordered_json alloc = ordered_json::object();
  ordered_json per = ordered_json::object();
  for (std::size_t k = 0; k < plan.client_ids.size(); ++k) {
    cuts[plan.client_ids[k]] = plan.cut_layers[k];
    alloc[plan.client_ids[k]] = plan.f_server[k];
    if (k < plan.per_client.size()) per[plan.client_ids[k]] = breakdown_json(plan.per_client[k]);
  }
  j["cut_layers"] = std::move(cuts);
  j["f_server_flops"] = std::move(alloc);
  j["theta"] = plan.theta;
  j["objective_s"] = plan.objective;
  j["converged"] = plan.converged;
  ordered_json trace = ordered_json::array();
  for (const auto& rec : plan.iterations) {
    trace.push_back({{"iteration", rec.iteration}, {"objective_s", rec.objective}});
  }
  j["trace"] = std::move(trace);
  j["per_client"] = std::move(per);
  return j;
}

optimizer::Plan plan_from_json(const json& j) {
  optimizer::Plan plan;
  try {
    plan.client_ids = j.at("clients").get<std::vector<std::string>>();
    for (const auto& id : plan.client_ids) {
      plan.cut_layers.push_back(j.at("cut_layers").at(id).get<int>());
      plan.f_server.push_back(j.at("f_server_flops").at(id).get<double>());
    }
    plan.theta = j.at("theta").get<int>();
    plan.objective = j.at("objective_s").get<double>();
    plan.converged = j.value("converged", false);
    if (j.contains("trace")) {
      for (const auto& rec : j.at("trace")) {
        plan.iterations.push_back(
            {rec.at("iteration").get<int>(), rec.at("objective_s").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan file: ") + e.what());
  }
  return plan;
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto prof = profile::load_profile(args.profile);
    const auto timing = profile::load_timing(args.timing);
    const auto curves = profile::fit_curves(prof, timing);
    write_file(args.out, curves_to_json(curves).dump(2) + "\n");
    out << fmt::format("size    |w^C|(l) = {} l^2            R = {}\n", curves.alpha, curves.r2_size);
    out << fmt::format("flops   F^C(l) = {} l, kappa = {}    R = {}\n", curves.beta, curves.kappa,
                       curves.r2_flops);
    out << fmt::format("smashed Lambda(l) = {} / (l + {})    R = {}\n", curves.gamma1,
                       curves.gamma2, curves.r2_smashed);
    return kExitOk;
  });
}

int cmd_plan(const PlanArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ls = load_scenario(args.scenario);
    const auto options = apply(ls.scenario.options, args.overrides);
    const auto plan =
        optimizer::optimize(ls.scenario.clients, ls.curves, ls.profile, ls.scenario.server, options);
    write_file(args.out, plan_to_json(plan).dump(2) + "\n");
    write_file(args.csv.value_or(with_suffix(args.out, ".csv")), plan_csv(plan, ls));
    std::size_t served = 0;
    for (double f : plan.f_server) served += f > 0.0 ? 1 : 0;
    out << fmt::format("objective {} s, {} of {} clients served, {} iterations{}\n",
                       plan.objective, served, plan.client_ids.size(), plan.iterations.size(),
                       plan.converged ? "" : " (not converged)");
    return kExitOk;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (args.rounds < 1) throw ValidationError("rounds must be >= 1");
    const auto ls = load_scenario(args.scenario);
    auto plan = plan_from_json(read_json(args.plan));

    // Everything past this point is a consistency check between two valid
    // inputs, so failures map to the inconsistency exit code.
    const auto& clients = ls.scenario.clients;
    std::set<std::string> scenario_ids;
    for (const auto& c : clients) scenario_ids.insert(c.id);
    const std::set<std::string> plan_ids(plan.client_ids.begin(), plan.client_ids.end());
    if (scenario_ids != plan_ids || plan_ids.size() != plan.client_ids.size()) {
      err << "mismatch: plan clients differ from scenario clients\n";
      return kExitInconsistent;
    }
    // Reorder the plan like the scenario so evaluate() pairs them up.
    std::map<std::string, std::size_t> at;
    for (std::size_t k = 0; k < plan.client_ids.size(); ++k) at[plan.client_ids[k]] = k;
    optimizer::Plan ordered = plan;
    for (std::size_t k = 0; k < clients.size(); ++k) {
      const std::size_t p = at[clients[k].id];
      ordered.client_ids[k] = plan.client_ids[p];
      ordered.cut_layers[k] = plan.cut_layers[p];
      ordered.f_server[k] = plan.f_server[p];
      if (ordered.cut_layers[k] < clients[k].l_min ||
          ordered.cut_layers[k] > ls.profile.layer_count) {
        err << "mismatch: cut-layer of " << clients[k].id << " outside [l_min, L]\n";
        return kExitInconsistent;
      }
    }

    sim::Campaign campaign;
    double analytic = 0.0;
    try {
      ordered.per_client =
          optimizer::evaluate(clients, ordered.cut_layers, ordered.f_server, ls.curves, ls.profile);
      analytic = optimizer::objective(ordered, clients, ls.curves, ls.profile);
      sim::SimOptions options;
      options.expand_epochs = args.expanded;
      campaign =
          sim::simulate_campaign(ordered, clients, ls.curves, ls.profile, args.rounds, options);
    } catch (const ValidationError& e) {
      err << "mismatch: " << e.what() << "\n";
      return kExitInconsistent;
    }

    // Rounds are identical; the trace file lays them end to end.
    std::string trace;
    double offset = 0.0;
    for (std::size_t r = 0; r < campaign.rounds.size(); ++r) {
      sim::RoundTrace shifted = campaign.rounds[r];
      for (auto& e : shifted.events) {
        e.start_s += offset;
        e.end_s += offset;
      }
      std::string csv = sim::trace_csv(shifted);
      if (r > 0) csv.erase(0, csv.find('\n') + 1);
      trace += csv;
      offset += campaign.rounds[r].round_latency_s;
    }
    write_file(args.out, trace);
    write_file(args.summary.value_or(with_suffix(args.out, ".summary.csv")),
               sim::summary_csv(campaign.rounds.front(), ordered));

    const double simulated = campaign.rounds.front().round_latency_s;
    const bool sim_ok = std::abs(simulated - analytic) <= kSimTolerance * std::abs(analytic);
    const bool plan_ok =
        std::abs(plan.objective - analytic) <= kSimTolerance * std::abs(analytic);
    out << fmt::format("round latency {} s, analytic objective {} s: {}\n", simulated, analytic,
                       sim_ok ? "match" : "MISMATCH");
    if (args.rounds > 1) {
      out << fmt::format("{} rounds, cumulative {} s\n", args.rounds, campaign.cumulative_s);
    }
    if (!sim_ok) return kExitInconsistent;
    if (!plan_ok) {
      err << fmt::format("mismatch: plan file states objective {} s, scenario gives {} s\n",
                         plan.objective, analytic);
      return kExitInconsistent;
    }
    return kExitOk;
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto ls = load_scenario(args.scenario);
    const auto& clients = ls.scenario.clients;

    if (args.layers) {
      std::string id;
      std::optional<double> f_server;
      if (ls.scenario.layer_sweep) {
        id = ls.scenario.layer_sweep->client;
        f_server = ls.scenario.layer_sweep->f_server;
      }
      if (args.client) id = *args.client;
      if (args.f_server_gflops) f_server = *args.f_server_gflops * kFlopsPerGiga;
      if (id.empty()) {
        if (clients.size() != 1) throw ValidationError("layer sweep needs a designated client");
        id = clients.front().id;
      }
      const ClientSpec* client = nullptr;
      for (const auto& c : clients) {
        if (c.id == id) client = &c;
      }
      if (!client) throw ValidationError("layer sweep: unknown client " + id);
      const double fs = f_server.value_or(ls.scenario.server.f_max);
      if (!(fs > 0.0)) throw ValidationError("layer sweep: server compute must be positive");

      std::string csv = fmt::format(
          "l,{},communication_s,client_compute_s,server_compute_s\r\n", kBreakdownHeader);
      for (int l = client->l_min; l <= ls.profile.layer_count; ++l) {
        const auto b = latency::latency_piecewise(*client, l, fs, ls.curves, ls.profile);
        csv += fmt::format("{},{},{},{},{}\r\n", l, breakdown_csv_fields(b), b.communication_s(),
                           b.client_compute_s(), b.server_compute_s());
      }
      write_file(args.out, csv);
      out << fmt::format("layer sweep for {} at {} GFLOPs/s: {} rows\n", id, fs / kFlopsPerGiga,
                         ls.profile.layer_count - client->l_min + 1);
      return kExitOk;
    }

    if (!ls.scenario.sweep) throw ValidationError("scenario has no sweep block (or pass --layers)");
    const auto options = apply(ls.scenario.options, args.overrides);
    const auto& sweep = *ls.scenario.sweep;

    // Points are independent; results are collected in input order.
    std::vector<std::future<optimizer::Plan>> jobs;
    for (double f_max : sweep.values) {
      jobs.push_back(std::async(std::launch::async, [&ls, &clients, &options, f_max] {
        return optimizer::optimize(clients, ls.curves, ls.profile, ServerSpec{f_max}, options);
      }));
    }
    std::string csv = "f_max_gflops,objective_s,served_clients,iterations,converged\r\n";
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto plan = jobs[i].get();
      std::size_t served = 0;
      for (double f : plan.f_server) served += f > 0.0 ? 1 : 0;
      csv += fmt::format("{},{},{},{},{}\r\n", sweep.values_gflops[i], plan.objective, served,
                         plan.iterations.size(), plan.converged ? 1 : 0);
    }
    write_file(args.out, csv);
    out << fmt::format("f_max sweep: {} points\n", jobs.size());
    return kExitOk;
  });
}

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (args.kind == "profile") {
      // EfficientNetV2-like shape: ~80 Mbit model, ~1.6 GFLOPs per layer of
      // training, smashed data decaying from ~2 Mbit.
      profile::SynthesisParams p;
      p.alpha = 23000.0;
      p.beta = 5.3e8;
      p.kappa = 2.0;
      p.gamma1 = 4.27e6;
      p.gamma2 = 1.0;
      p.layer_count = args.layers;
      p.noise = args.noise;
      p.seed = args.seed;
      auto prof = profile::synthesize_profile(p);
      // Bits and FLOPs are counts; rounding keeps the arrays monotone.
      for (auto* v : {&prof.client_model_bits, &prof.client_flops_fwd, &prof.smashed_bits}) {
        for (double& x : *v) x = std::round(x);
      }
      prof.total_model_bits = prof.client_model_bits.back();
      prof.total_flops = std::round(prof.total_flops);
      prof.validate();
      profile::save_profile(prof, args.out);
      out << fmt::format("profile with {} layers written to {}\n", prof.layer_count,
                         args.out.string());
      return kExitOk;
    }
    if (args.kind == "timing") {
      const auto timing = profile::synthesize_timing(2.0, args.count, args.noise, args.seed);
      profile::save_timing(timing, args.out);
      out << fmt::format("{} timing pairs written to {}\n", timing.size(), args.out.string());
      return kExitOk;
    }
    if (args.kind == "scenario") {
      ScenarioSynthesis s;
      s.seed = args.seed;
      s.candidates = args.candidates;
      s.selected = args.selected;
      s.f_max_gflops = args.f_max_gflops;
      write_file(args.out, synthesize_scenario_json(s).dump(2) + "\n");
      out << fmt::format("scenario with {} of {} candidates written to {}\n", s.selected,
                         s.candidates, args.out.string());
      return kExitOk;
    }
    throw ValidationError("synth kind must be profile, timing or scenario");
  });
}

}  // namespace sflplan::cli
