#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "regime_design/serialization.hpp"

namespace cli = regime_design::cli;
namespace fs = std::filesystem;
using regime_design::ErrorKind;

namespace {

const fs::path kConfig = fs::path(REGIME_DESIGN_SOURCE_DIR) / "config" / "nyc_ems.json";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("regime_design_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

/// Brooklyn night from the synthetic extract: 20 demands, one conflict.
fs::path ingest_brooklyn(const std::string& name) {
  cli::IngestArgs a;
  a.source.config = kConfig;
  a.source.synthetic = true;
  a.source.boroughs = {"BROOKLYN"};
  a.source.windows = {"night"};
  a.source.profiles = {"BAL"};
  a.out = scratch(name);
  REQUIRE(cli::cmd_ingest(a, {"regime-design", "ingest"}) == cli::kExitOk);
  return a.out;
}

}  // namespace

TEST_CASE("exit codes and slugs") {
  CHECK(cli::exit_code(ErrorKind::Other) == 1);
  CHECK(cli::exit_code(ErrorKind::Infeasible) == 2);
  CHECK(cli::exit_code(ErrorKind::Precondition) == 3);
  CHECK(cli::exit_code(ErrorKind::Limit) == 4);
  CHECK(cli::slug("RICHMOND / STATEN ISLAND") == "richmond_staten_island");
  CHECK(cli::slug("TAIL+") == "tail+");
  CHECK(cli::slug("D1") == "d1");
}

TEST_CASE("log level follows the environment") {
  ::unsetenv("REGIME_DESIGN_LOG");
  CHECK(cli::log_level() == cli::LogLevel::Warn);
  ::setenv("REGIME_DESIGN_LOG", "debug", 1);
  CHECK(cli::log_level() == cli::LogLevel::Debug);
  ::setenv("REGIME_DESIGN_LOG", "loud", 1);
  CHECK(cli::log_level() == cli::LogLevel::Warn);
  ::unsetenv("REGIME_DESIGN_LOG");
}

TEST_CASE("ingest, solve, simulate and report") {
  const fs::path in = ingest_brooklyn("flow_ingest");
  CHECK(first_line(in / "summary.csv") ==
        "borough,window,status,demands,edges,pi_CARDBR,pi_INJURY,pi_SICK,pi_UNC,lambda_CARDBR,"
        "lambda_INJURY,lambda_SICK,lambda_UNC");
  CHECK(slurp(in / "summary.csv").find("\"BROOKLYN\",night,ok,20,1,") != std::string::npos);
  const auto manifest = regime_design::read_json(in / "manifest.json");
  CHECK(manifest["command"] == "ingest");
  CHECK(manifest["data"] == "synthetic");
  CHECK(manifest["instance_hashes"].size() == 1);
  const fs::path instance = in / "brooklyn_night_bal.instance.json";
  const fs::path params = in / "brooklyn_night_bal.params.json";
  REQUIRE(fs::exists(instance));
  REQUIRE(fs::exists(params));

  cli::SolveArgs s;
  s.instance = instance;
  s.params = params;
  s.out = scratch("flow_solve");
  REQUIRE(cli::cmd_solve(s, {"regime-design", "solve"}) == cli::kExitOk);
  CHECK(first_line(s.out / "iterations.csv") == "iter,LB,UB,gap,cut_kind,subproblem_status,wall_ms");
  CHECK(first_line(s.out / "program.txt") == "# regime-design conic program");
  const auto plan = regime_design::read_json(s.out / "plan.json");
  CHECK(plan["status"] == "optimal");
  const auto solve_manifest = regime_design::read_json(s.out / "manifest.json");
  CHECK(plan["instance_hash"] == solve_manifest["instance_hash"]);
  CHECK(manifest["instance_hashes"]["brooklyn_night_bal.instance.json"] == plan["instance_hash"]);
  for (const char* key : {"command", "argv", "config", "instance_hash", "method", "parameters",
                          "seed", "tool_version", "started_at", "finished_at", "outputs"})
    CHECK_MESSAGE(solve_manifest.contains(key), key);

  cli::SolveArgs c = s;
  c.method = "compact";
  c.out = scratch("flow_compact");
  REQUIRE(cli::cmd_solve(c, {}) == cli::kExitOk);
  CHECK_FALSE(fs::exists(c.out / "iterations.csv"));
  const auto cplan = regime_design::read_json(c.out / "plan.json");
  CHECK(cplan["objective_value"].get<double>() ==
        doctest::Approx(plan["objective_value"].get<double>()).epsilon(1e-5));

  cli::SimulateArgs m;
  m.instance = instance;
  m.plan = s.out / "plan.json";
  m.samples = 20000;
  m.out = scratch("flow_sim");
  REQUIRE(cli::cmd_simulate(m, {}) == cli::kExitOk);
  CHECK(first_line(m.out / "simulation.csv") == "demand_id,grid_t,empirical_cdf,analytic_cdf");
  const std::string first = slurp(m.out / "simulation.csv");
  m.out = scratch("flow_sim_again");
  REQUIRE(cli::cmd_simulate(m, {}) == cli::kExitOk);
  CHECK(slurp(m.out / "simulation.csv") == first);

  cli::ReportArgs r;
  r.instance = instance;
  r.baseline = "baseline";
  r.optimal = s.out / "plan.json";
  r.params = params;
  r.out = scratch("flow_report");
  REQUIRE(cli::cmd_report(r, {}) == cli::kExitOk);
  CHECK(first_line(r.out / "deviation.csv") == "label,metric,baseline,optimal,relative_change_pct");
  CHECK(first_line(r.out / "paired.csv") ==
        "demand_id,baseline_expected_response,optimal_expected_response");
  CHECK(slurp(r.out / "deviation.csv").find("brooklyn_night_bal,cvar,") != std::string::npos);
}

TEST_CASE("failures map to exit codes") {
  const fs::path in = ingest_brooklyn("codes_ingest");
  const fs::path instance = in / "brooklyn_night_bal.instance.json";
  const fs::path params = in / "brooklyn_night_bal.params.json";

  // Full coverage is impossible with a conflict edge.
  auto strict = regime_design::read_json(params);
  strict["coverage"] = 1.0;
  const fs::path strict_path = in / "strict.params.json";
  regime_design::write_json(strict_path, strict);
  cli::SolveArgs s;
  s.instance = instance;
  s.params = strict_path;
  s.out = scratch("codes_infeasible");
  CHECK(cli::cmd_solve(s, {}) == cli::kExitInfeasible);
  CHECK(regime_design::read_json(s.out / "plan.json")["status"] == "infeasible");

  s.params = params;
  s.method = "poly";  // the instance has a conflict
  s.out = scratch("codes_poly");
  CHECK(cli::cmd_solve(s, {}) == cli::kExitPrecondition);

  s.method = "bogus";
  CHECK(cli::cmd_solve(s, {}) == cli::kExitPrecondition);

  s.method = "benders";
  s.max_iter = 1;
  s.out = scratch("codes_limit");
  CHECK(cli::cmd_solve(s, {}) == cli::kExitLimit);

  s.instance = in / "missing.json";
  CHECK(cli::cmd_solve(s, {}) == cli::kExitOther);

  // A plan solved elsewhere is refused.
  cli::IngestArgs other;
  other.source.config = kConfig;
  other.source.synthetic = true;
  other.source.boroughs = {"MANHATTAN"};
  other.source.windows = {"night"};
  other.source.profiles = {"BAL"};
  other.out = scratch("codes_other");
  REQUIRE(cli::cmd_ingest(other, {}) == cli::kExitOk);
  cli::SolveArgs o;
  o.instance = other.out / "manhattan_night_bal.instance.json";
  o.params = other.out / "manhattan_night_bal.params.json";
  o.out = scratch("codes_other_solve");
  REQUIRE(cli::cmd_solve(o, {}) == cli::kExitOk);
  cli::ReportArgs r;
  r.instance = instance;
  r.baseline = "baseline";
  r.optimal = o.out / "plan.json";
  r.params = params;
  r.out = scratch("codes_report");
  CHECK(cli::cmd_report(r, {}) == cli::kExitPrecondition);

  // Unstable rates cannot be simulated.
  auto plan = regime_design::read_json(o.out / "plan.json");
  plan.erase("instance_hash");
  for (auto& v : plan["service_rates"]) v = 1e-6;
  regime_design::write_json(o.out / "unstable.json", plan);
  cli::SimulateArgs m;
  m.instance = other.out / "manhattan_night_bal.instance.json";
  m.plan = o.out / "unstable.json";
  m.samples = 100;
  m.out = scratch("codes_sim");
  CHECK(cli::cmd_simulate(m, {}) == cli::kExitPrecondition);

  cli::IngestArgs missing;
  missing.source.config = kConfig;  // points at an extract that is not shipped
  missing.out = scratch("codes_missing");
  CHECK(cli::cmd_ingest(missing, {}) == cli::kExitOther);
}

TEST_CASE("sweep aggregates every run") {
  cli::SweepArgs a;
  a.source.config = kConfig;
  a.source.synthetic = true;
  a.source.boroughs = {"BROOKLYN", "QUEENS"};
  a.source.profiles = {"BAL", "COV"};
  a.methods = {"benders", "compact", "poly"};
  a.jobs = 2;
  a.out = scratch("sweep");
  REQUIRE(cli::cmd_sweep(a, {"regime-design", "sweep"}) == cli::kExitOk);
  std::ifstream in(a.out / "aggregate.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("borough,window,profile,method,status,", 0) == 0);
  int ok = 0, failed = 0, rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",optimal,") != std::string::npos) ++ok;
    if (line.find(",error,") != std::string::npos) ++failed;
  }
  CHECK(rows == 2 * 2 * 3);
  CHECK(ok == 4);      // Brooklyn with benders and compact
  CHECK(failed == 8);  // Brooklyn poly (conflict) and every Queens run (no incidents)
  CHECK(fs::exists(a.out / "runs" / "brooklyn_night_bal_benders" / "plan.json"));
  CHECK(fs::exists(a.out / "deviations.csv"));
  CHECK(regime_design::read_json(a.out / "manifest.json")["command"] == "sweep");
}
