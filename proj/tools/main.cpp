#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_optimizer_flags(CLI::App* cmd, sflplan::cli::OptimizerOverrides& o) {
  cmd->add_flag("--strict-paper-mode", o.strict_paper_mode,
                "Floor-only rounding and no probe allocation for unserved clients");
  cmd->add_option("--max-iters", o.max_iters, "Iteration cap for the alternating optimizer")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--conv-tol", o.conv_tol, "Relative objective change that counts as converged")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sflplan::cli;

  CLI::App app{"Cut-layer and server-compute planner for split federated learning"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the per-layer regression curves of a profile");
  fit_cmd->add_option("profile", fit.profile, "Profile JSON")->required();
  fit_cmd->add_option("timing", fit.timing, "FP/BP timing JSON")->required();
  fit_cmd->add_option("-o,--out", fit.out, "Output curves JSON")->required();

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Optimize cut-layers and server allocation");
  plan_cmd->add_option("scenario", plan.scenario, "Scenario JSON")->required();
  plan_cmd->add_option("-o,--out", plan.out, "Output plan JSON")->required();
  plan_cmd->add_option("--csv", plan.csv, "Per-client CSV (default: <out>.csv)");
  add_optimizer_flags(plan_cmd, plan.overrides);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Replay a plan as a round timeline");
  sim_cmd->add_option("scenario", sim.scenario, "Scenario JSON")->required();
  sim_cmd->add_option("plan", sim.plan, "Plan JSON")->required();
  sim_cmd->add_option("-o,--out", sim.out, "Output trace CSV")->required();
  sim_cmd->add_option("--summary", sim.summary, "Summary CSV (default: <out>.summary.csv)");
  sim_cmd->add_option("--rounds", sim.rounds, "Number of global rounds")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--expanded", sim.expanded, "One event block per epoch");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep F^max, or the cut-layer of one client");
  sweep_cmd->add_option("scenario", sweep.scenario, "Scenario JSON")->required();
  sweep_cmd->add_option("-o,--out", sweep.out, "Output CSV")->required();
  sweep_cmd->add_flag("--layers", sweep.layers, "Per-layer latency of one client");
  sweep_cmd->add_option("--client", sweep.client, "Client for --layers");
  sweep_cmd->add_option("--f-server-gflops", sweep.f_server_gflops,
                        "Server compute for --layers (default: the scenario's)")
      ->check(CLI::PositiveNumber);
  add_optimizer_flags(sweep_cmd, sweep.overrides);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic profile, timing set or scenario");
  synth_cmd->add_option("kind", synth.kind, "profile, timing or scenario")
      ->required()
      ->check(CLI::IsMember({"profile", "timing", "scenario"}));
  synth_cmd->add_option("-o,--out", synth.out, "Output JSON")->required();
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--noise", synth.noise, "Multiplicative noise amplitude")
      ->check(CLI::Range(0.0, 0.5));
  synth_cmd->add_option("--layers", synth.layers, "Layer count (profile)")->check(CLI::Range(3, 10000));
  synth_cmd->add_option("--count", synth.count, "Timing pairs (timing)")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--candidates", synth.candidates, "Candidate clients (scenario)");
  synth_cmd->add_option("--selected", synth.selected, "Selected clients (scenario)");
  synth_cmd->add_option("--f-max-gflops", synth.f_max_gflops, "Server budget (scenario)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*fit_cmd) return cmd_fit(fit, std::cout, std::cerr);
  if (*plan_cmd) return cmd_plan(plan, std::cout, std::cerr);
  if (*sim_cmd) return cmd_simulate(sim, std::cout, std::cerr);
  if (*sweep_cmd) return cmd_sweep(sweep, std::cout, std::cerr);
  return cmd_synth(synth, std::cout, std::cerr);
}
