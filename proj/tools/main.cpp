#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace cli = regime_design::cli;

namespace {

void add_source(CLI::App* cmd, cli::DataSource& src) {
  cmd->add_option("--config", src.config, "Ingestion config (JSON)")->required();
  cmd->add_option("--data", src.data, "Incident CSV; overrides the config");
  cmd->add_flag("--synthetic", src.synthetic, "Use the built-in synthetic extract");
  cmd->add_option("--borough", src.boroughs, "Restrict to boroughs");
  cmd->add_option("--window", src.windows, "Restrict to windows");
  cmd->add_option("--profile", src.profiles, "Restrict to profiles");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Regime-aware EMS service capacity design"};
  app.set_version_flag("--version", REGIME_DESIGN_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  cli::IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Build instances from incident records");
  add_source(c_ingest, ingest.source);
  c_ingest->add_option("--jobs", ingest.jobs, "Worker threads")->check(CLI::PositiveNumber);
  c_ingest->add_option("--out", ingest.out, "Output directory")->required();

  cli::SolveArgs solve;
  auto* c_solve = app.add_subcommand("solve", "Optimise a service plan");
  c_solve->add_option("instance", solve.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  c_solve->add_option("--params", solve.params, "Design parameters (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  c_solve->add_option("--config", solve.params, "Alias of --params")->check(CLI::ExistingFile);
  c_solve->add_option("--method", solve.method, "Solver")
      ->check(CLI::IsMember({"benders", "compact", "poly", "enum"}));
  c_solve->add_option("--gap", solve.gap, "Relative optimality gap")->check(CLI::NonNegativeNumber);
  c_solve->add_option("--max-iter", solve.max_iter, "Benders iteration cap")->check(CLI::PositiveNumber);
  c_solve->add_option("--seed", solve.seed, "Recorded in the manifest; solvers are deterministic");
  c_solve->add_option("--jobs", solve.jobs, "Worker threads for enum")->check(CLI::PositiveNumber);
  c_solve->add_option("--out", solve.out, "Output directory")->required();

  cli::SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo check of a plan");
  c_sim->add_option("instance", sim.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--plan", sim.plan, "Plan JSON from solve")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--n-samples", sim.samples, "Samples per demand")->check(CLI::PositiveNumber);
  c_sim->add_option("--seed", sim.seed, "Random seed");
  c_sim->add_option("--grid-points", sim.grid_points, "CDF grid points per demand")->check(CLI::PositiveNumber);
  c_sim->add_flag("--discrete-event", sim.discrete_event, "Per-regime FCFS queues instead of exponential draws");
  c_sim->add_option("--jobs", sim.jobs, "Worker threads")->check(CLI::PositiveNumber);
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  cli::ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Compare a plan against a baseline");
  c_rep->add_option("instance", rep.instance, "Instance JSON")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--baseline", rep.baseline, "Plan file, or 'baseline'")
      ->default_val("baseline");
  c_rep->add_option("--optimal", rep.optimal, "Plan JSON to compare")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--params", rep.params, "Design parameters (JSON)")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--out", rep.out, "Output directory")->required();

  cli::SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Ingest, solve and report over a grid");
  add_source(c_sweep, sweep.source);
  c_sweep->add_option("--method", sweep.methods, "Solvers; defaults to the config's sweep list")
      ->check(CLI::IsMember({"benders", "compact", "poly", "enum"}));
  c_sweep->add_option("--gap", sweep.gap, "Relative optimality gap")->check(CLI::NonNegativeNumber);
  c_sweep->add_option("--max-iter", sweep.max_iter, "Benders iteration cap")->check(CLI::PositiveNumber);
  c_sweep->add_option("--seed", sweep.seed, "Recorded in the manifests");
  c_sweep->add_option("--jobs", sweep.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  c_sweep->add_option("--max-demands", sweep.max_demands, "Skip larger instances")->check(CLI::PositiveNumber);
  c_sweep->add_option("--out", sweep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitOther;
  }

  if (*c_ingest) return cli::cmd_ingest(ingest, args);
  if (*c_solve) return cli::cmd_solve(solve, args);
  if (*c_sim) return cli::cmd_simulate(sim, args);
  if (*c_rep) return cli::cmd_report(rep, args);
  return cli::cmd_sweep(sweep, args);
}
