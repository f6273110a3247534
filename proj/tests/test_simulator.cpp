#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "regime_design/errors.hpp"
#include "regime_design/exact_solvers.hpp"
#include "regime_design/simulator.hpp"

using namespace regime_design;

namespace {

Instance small() {
  const std::vector<Regime> R = {{0, "x", 1.0, 0.25, 1.0}, {1, "y", 3.0, 0.75, 1.0}};
  return Instance({{"a", 2, 4, 0.2, 1}, {"b", 1, 3, 0.2, 1}}, R, std::vector<ConflictEdge>{});
}

ServicePlan plan_for(const Instance& inst, Eigen::VectorXd mu) {
  ServicePlan p;
  p.service_rates = std::move(mu);
  p.protected_demands.assign(inst.num_demands(), false);
  p.feasible = true;
  return p;
}

}  // namespace

TEST_CASE("simulation is a pure function of the seed") {
  const Instance inst = small();
  const ServicePlan plan = plan_for(inst, Eigen::Vector2d(2.0, 4.5));
  const SimulationResult a = simulate(inst, plan, 20000, 5);
  const SimulationResult b = simulate(inst, plan, 20000, 5);
  SimulationOptions threaded;
  threaded.threads = 3;
  const SimulationResult c = simulate(inst, plan, 20000, 5, {}, threaded);
  const SimulationResult d = simulate(inst, plan, 20000, 6);
  REQUIRE(a.demands.size() == 2);
  CHECK(a.demands[0].empirical_cdf == b.demands[0].empirical_cdf);
  CHECK(a.demands[1].empirical_mean == c.demands[1].empirical_mean);
  CHECK(a.demands[0].empirical_mean != d.demands[0].empirical_mean);
}

TEST_CASE("empirical distribution tracks the analytic one") {
  const Instance inst = small();
  const ServicePlan plan = plan_for(inst, Eigen::Vector2d(2.0, 4.5));
  const std::vector<double> pi = {0.25, 0.75}, x = {1.0, 1.5};
  const SimulationResult r = simulate(inst, plan, 200000, 11);
  for (int a = 0; a < 2; ++a) {
    const DemandStatistics& d = r.demands[a];
    CHECK(d.grid.size() == 50);
    CHECK(d.grid.front() == doctest::Approx(inst.demand(a).access_time));
    for (std::size_t g = 0; g < d.grid.size(); ++g) {
      const double exact = oracle::mixture_cdf(d.grid[g], inst.demand(a).access_time, pi, x);
      CHECK(d.analytic_cdf[g] == doctest::Approx(exact).epsilon(1e-12));
      CHECK(std::abs(d.empirical_cdf[g] - exact) < 0.01);
    }
    CHECK(d.analytic_mean == doctest::Approx(oracle::mixture_mean(inst.demand(a).access_time, pi, x)));
    CHECK(d.analytic_sd == doctest::Approx(oracle::mixture_sd(pi, x)));
    CHECK(std::abs(d.sla_hit_rate - d.analytic_sla) < 0.01);
  }
}

TEST_CASE("queue mode reproduces the stationary sojourn distribution") {
  const Instance inst = small();
  const ServicePlan plan = plan_for(inst, Eigen::Vector2d(2.0, 4.5));
  SimulationOptions opt;
  opt.discrete_event = true;
  const SimulationResult r = simulate(inst, plan, 200000, 3, {}, opt);
  for (const auto& d : r.demands) CHECK(std::abs(d.empirical_mean - d.analytic_mean) < 0.05);
  CHECK(r.max_cdf_gap < 0.02);
}

TEST_CASE("custom grid and csv layout") {
  const Instance inst = small();
  const ServicePlan plan = plan_for(inst, Eigen::Vector2d(2.0, 4.5));
  const SimulationResult r = simulate(inst, plan, 1000, 1, {0.0, 2.5, 100.0});
  CHECK(r.demands[0].empirical_cdf.front() == 0.0);
  CHECK(r.demands[0].empirical_cdf.back() == 1.0);
  std::ostringstream out;
  write_simulation_csv(r, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "demand_id,grid_t,empirical_cdf,analytic_cdf");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("simulation refuses unstable or mismatched plans") {
  const Instance inst = small();
  CHECK_THROWS_AS((void)simulate(inst, plan_for(inst, Eigen::Vector2d(0.9, 4.0)), 100, 1),
                  UnstableRegimeError);
  CHECK_THROWS_AS((void)simulate(inst, plan_for(inst, Eigen::Vector3d(2, 4, 5)), 100, 1),
                  DimensionMismatch);
  CHECK_THROWS_AS((void)simulate(inst, plan_for(inst, Eigen::Vector2d(2, 4)), 0, 1), DomainError);
}

TEST_CASE("optimised plans pass Monte-Carlo verification") {
  const Instance inst = small();
  DesignParams p;
  p.coverage = 1.0;
  p.congestion_weight = 0.1;
  const BendersResult r = benders_solve(inst, p);
  REQUIRE(r.state.status == SolveStatus::Optimal);
  const VerificationReport v = verify_plan(inst, p, r.plan, 200000, 4);
  CHECK(v.passed);
  CHECK(v.discrepancies.empty());

  // Halving the slack rates breaks the service level.
  ServicePlan weak = r.plan;
  weak.service_rates = inst.arrival_rates() + 0.5 * (r.plan.service_rates - inst.arrival_rates());
  const VerificationReport bad = verify_plan(inst, p, weak, 200000, 4);
  CHECK_FALSE(bad.passed);
  REQUIRE_FALSE(bad.discrepancies.empty());
  CHECK(bad.discrepancies.front().check == "sla");
}

TEST_CASE("seed mixing") {
  CHECK(mix_seed(0) != mix_seed(1));
  CHECK(mix_seed(42) == mix_seed(42));
}
