#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "regime_design/cone.hpp"
#include "regime_design/errors.hpp"
#include "regime_design/evaluation.hpp"
#include "regime_design/exact_solvers.hpp"
#include "regime_design/performance.hpp"
#include "support.hpp"

using namespace regime_design;

namespace {

Instance single(double lambda, double alpha, double slack) {
  Regime g{0, "only", lambda, 1.0, 1.0};
  Demand d{"a", 5.0, 5.0 + slack, alpha, 1.0};
  return Instance({d}, {g}, std::vector<ConflictEdge>{});
}

}  // namespace

TEST_CASE("one regime, one protected demand hits the closed form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lam(0.1, 5), al(0.01, 0.5), dl(0.05, 5);
  for (int k = 0; k < 20; ++k) {
    const double L = lam(rng), a = al(rng), D = dl(rng);
    const Instance inst = single(L, a, D);
    const SubproblemSolution sol = solve_fixed(inst, {}, {true});
    REQUIRE(sol.status == SubproblemStatus::Optimal);
    const double mu = inst.arrival_rates()[0] + sol.slack_rates[0];
    const double expect = single_regime_min_rate(L, a, D, inst.stability_margin(), true);
    CHECK(mu == doctest::Approx(expect).epsilon(1e-6));
    CHECK(sol.kkt.certified());
  }
}

TEST_CASE("congestion term alone gives mu = Lambda + kappa / c") {
  Regime g{0, "only", 2.0, 1.0, 1.5};
  Demand d{"a", 5.0, 9.0, 1.0, 1.0};
  const Instance inst({d}, {g}, std::vector<ConflictEdge>{});
  DesignParams p;
  p.congestion_weight = 0.3;
  const SubproblemSolution sol = solve_fixed(inst, p, {false});
  REQUIRE(sol.status == SubproblemStatus::Optimal);
  CHECK(sol.slack_rates[0] == doctest::Approx(0.3 / 1.5).epsilon(1e-6));
  CHECK(sol.kkt.certified());
}

TEST_CASE("exact solvers agree on small random instances") {
  std::mt19937_64 rng(5);
  int solved = 0;
  rd_test::RandomShape shape;
  shape.max_demands = 12;
  shape.zero_slack = true;
  for (int k = 0; k < 50; ++k) {
    const Instance inst = rd_test::random_instance(rng, shape);
    const DesignParams p = rd_test::random_params(rng, inst);
    const auto en = enumerate_solve(inst, p);
    BendersOptions bo;
    bo.gap_tol = 1e-7;
    const auto be = benders_solve(inst, p, bo);
    CompactOptions co;
    co.gap_tol = 1e-7;
    const auto cp = compact_solve(inst, p, co);
    CAPTURE(k);
    REQUIRE(be.state.status != SolveStatus::LimitReached);
    CHECK(en.status == be.state.status);
    CHECK(en.status == cp.status);
    if (en.status != SolveStatus::Optimal) continue;
    ++solved;
    const double ref = en.plan.objective_value;
    CHECK(be.plan.objective_value == doctest::Approx(ref).epsilon(1e-5));
    CHECK(cp.plan.objective_value == doctest::Approx(ref).epsilon(1e-5));
    CHECK(check_feasibility(inst, p, be.plan).feasible);
    CHECK(check_feasibility(inst, p, cp.plan).feasible);
  }
  MESSAGE("solved " << solved);
}

namespace {

/// Three demands in a path a - b - c, generous slack everywhere.
Instance path_instance() {
  const std::vector<Regime> R = {{0, "x", 1.0, 0.5, 1.0}, {1, "y", 1.0, 0.5, 2.0}};
  std::vector<Demand> d = {{"a", 2, 4, 0.1, 1}, {"b", 2, 3, 0.05, 1}, {"c", 2, 6, 0.2, 1}};
  return Instance(d, R, std::vector<ConflictEdge>{{0, 1}, {1, 2}});
}

}  // namespace

TEST_CASE("feasibility cuts exclude exactly the supersets of their support") {
  const Cut cut = feasibility_cut({true, false, true});
  CHECK(cut.kind == CutKind::Feasibility);
  CHECK_FALSE(cut.admits({true, false, true}));
  CHECK_FALSE(cut.admits({true, true, true}));
  CHECK(cut.admits({true, true, false}));
  CHECK(cut.admits({false, false, false}));
}

TEST_CASE("strengthened cuts keep reference coefficients only") {
  Cut cut;
  cut.coefficients = Eigen::Vector3d(0.7, -0.2, 5.0);
  cut.value = 2.0;
  cut.reference = {true, false, true};
  const Cut s = strengthen_cut(cut, 1.0);
  CHECK(s.coefficients[0] == doctest::Approx(0.7));
  CHECK(s.coefficients[1] == 0.0);
  CHECK(s.coefficients[2] == doctest::Approx(1.0));  // clamped to value - floor
  // At the reference point the bound is unchanged.
  CHECK(s.bound_at(cut.reference) == doctest::Approx(cut.value));
  CHECK(s.bound_at({false, false, false}) == doctest::Approx(0.3));
}

TEST_CASE("master honours coverage, conflicts and cuts") {
  const Instance inst = path_instance();
  DesignParams p;
  p.coverage = 0.6;  // two of three: only {a, c} avoids both edges
  const MasterResult mr = master_solve(inst, p, {}, 0.0);
  REQUIRE(mr.feasible);
  CHECK(mr.proposal == Protection{true, false, true});
  const MasterResult cut = master_solve(inst, p, {feasibility_cut({true, false, true})}, 0.0);
  CHECK_FALSE(cut.feasible);
  MasterOptions opt;
  opt.cutoff = -1.0;  // nothing can beat a value below the theta floor
  CHECK_FALSE(master_solve(inst, p, {}, 0.0, opt).feasible);
}

TEST_CASE("benders log and iteration csv") {
  const Instance inst = path_instance();
  DesignParams p;
  p.coverage = 0.3;
  p.congestion_weight = 0.1;
  const BendersResult r = benders_solve(inst, p);
  REQUIRE(r.state.status == SolveStatus::Optimal);
  CHECK(r.plan.method == "benders");
  CHECK(r.state.iterations >= static_cast<int>(r.state.log.size()));
  CHECK(r.state.upper_bound == doctest::Approx(r.plan.objective_value));
  CHECK(r.state.lower_bound <= r.state.upper_bound + 1e-9);
  std::ostringstream out;
  write_iteration_csv(r.state, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,LB,UB,gap,cut_kind,subproblem_status,wall_ms");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(r.state.log.size()));
  const EnumerateResult en = enumerate_solve(inst, p);
  CHECK(r.plan.objective_value == doctest::Approx(en.plan.objective_value).epsilon(1e-5));
}

TEST_CASE("iteration limit is reported, not hidden") {
  std::mt19937_64 rng(9);
  rd_test::RandomShape shape;
  shape.min_demands = 10;
  shape.max_demands = 12;
  shape.edge_probability = 0.1;
  int limited = 0;
  for (int k = 0; k < 30 && limited == 0; ++k) {
    const Instance inst = rd_test::random_instance(rng, shape);
    DesignParams p;
    p.coverage = 0.5;
    p.congestion_weight = 0.1;
    BendersOptions bo;
    bo.max_iter = 1;
    const BendersResult r = benders_solve(inst, p, bo);
    if (r.state.status != SolveStatus::LimitReached) continue;
    ++limited;
    CHECK(r.state.iterations == 1);
    CHECK(r.state.lower_bound <= r.state.upper_bound);
  }
  CHECK(limited == 1);
}

TEST_CASE("compact solver reports node limits") {
  std::mt19937_64 rng(10);
  rd_test::RandomShape shape;
  shape.min_demands = 12;
  shape.max_demands = 12;
  shape.edge_probability = 0.3;
  const Instance inst = rd_test::random_instance(rng, shape);
  DesignParams p;
  p.coverage = 0.3;
  p.congestion_weight = 0.1;
  CompactOptions co;
  co.node_limit = 1;
  const CompactResult r = compact_solve(inst, p, co);
  CHECK(r.status != SolveStatus::Infeasible);
  if (r.status == SolveStatus::LimitReached) CHECK(r.lower_bound <= r.upper_bound + 1e-9);
}

TEST_CASE("infeasible models are detected by every solver") {
  const Instance inst = path_instance();
  DesignParams p;
  p.coverage = 1.0;  // all three, but the path forbids it
  CHECK(enumerate_solve(inst, p).status == SolveStatus::Infeasible);
  CHECK(benders_solve(inst, p).state.status == SolveStatus::Infeasible);
  CHECK(compact_solve(inst, p).status == SolveStatus::Infeasible);
}

TEST_CASE("enumeration refuses large instances") {
  std::vector<Demand> d;
  for (int a = 0; a <= kEnumerationLimit; ++a) d.push_back({"d" + std::to_string(a), 1, 3, 0.1, 1});
  const Instance inst(d, {{0, "only", 1.0, 1.0, 1.0}}, std::vector<ConflictEdge>{});
  CHECK_THROWS_AS((void)enumerate_solve(inst, {}), PreconditionError);
}

TEST_CASE("status names") {
  CHECK(std::string(to_string(SolveStatus::Optimal)) == "optimal");
  CHECK(std::string(to_string(SolveStatus::Infeasible)) == "infeasible");
  CHECK(std::string(to_string(SolveStatus::LimitReached)) == "limit");
  CHECK(std::string(to_string(CutKind::Feasibility)) == "feasibility");
}
