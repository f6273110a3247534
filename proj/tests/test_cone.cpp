#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "regime_design/cone.hpp"
#include "regime_design/errors.hpp"
#include "regime_design/evaluation.hpp"
#include "support.hpp"

using namespace regime_design;

TEST_CASE("exponential cone membership") {
  CHECK(exp_cone_contains(std::exp(1.0), 1.0, 1.0));
  CHECK_FALSE(exp_cone_contains(std::exp(1.0) - 1e-6, 1.0, 1.0));
  CHECK(exp_cone_contains(1.0, 0.0, -3.0));  // closure: y = 0, x >= 0, z <= 0
  CHECK_FALSE(exp_cone_contains(1.0, 0.0, 1.0));
  CHECK_FALSE(exp_cone_contains(1.0, -1.0, 0.0));
  CHECK(exp_cone_violation(std::exp(2.0), 1.0, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(exp_cone_violation(1.0, 1.0, 2.0) == doctest::Approx(std::exp(2.0) - 1.0));
}

TEST_CASE("dual exponential cone membership") {
  // (u, v, w) with w < 0 belongs iff e u >= -w exp(v / w).
  CHECK(dual_cone_contains(1.0, 0.0, -std::exp(1.0)));
  CHECK_FALSE(dual_cone_contains(1.0, 0.0, -std::exp(1.0) * 1.001));
  CHECK(dual_cone_contains(0.0, 2.0, 0.0));
  CHECK_FALSE(dual_cone_contains(-1.0, 2.0, 0.0));
  CHECK_FALSE(dual_cone_contains(1.0, 1.0, 0.5));
  CHECK(dual_cone_margin(1.0, 0.0, -std::exp(1.0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dual_cone_margin(1.0, 1.0, 0.5) < 0);
}

TEST_CASE("programs are built from the variable catalog") {
  std::mt19937_64 rng(21);
  const Instance inst = rd_test::random_instance(rng);
  DesignParams p;
  p.tail_fraction = 0.0;
  p.congestion_weight = 0.2;
  Protection s(inst.num_demands(), false);
  s[0] = true;
  const ConicProgram prog = build_subproblem(inst, p, s);
  CHECK(prog.num_regimes() == inst.num_regimes());
  CHECK(prog.num_demands() == inst.num_demands());
  CHECK(prog.objective.size() == prog.num_variables());
  CHECK(prog.variables[prog.mu0].name == "mu[0]");
  int sla_blocks = 0;
  for (const auto& c : prog.cones)
    if (c.family == ConeFamily::ServiceLevel) ++sla_blocks;
  CHECK(sla_blocks == inst.num_demands() * inst.num_regimes());

  std::ostringstream out;
  dump_program(prog, out);
  const std::string text = out.str();
  CHECK(text.rfind("# regime-design conic program", 0) == 0);
  CHECK(text.find("VARIABLES " + std::to_string(prog.num_variables())) != std::string::npos);
  CHECK(text.find("ROWS") != std::string::npos);
  CHECK(text.find("CONES") != std::string::npos);

  CHECK_THROWS_AS((void)build_subproblem(inst, p, Protection(inst.num_demands() + 1)),
                  DimensionMismatch);
  p.tail_fraction = 0.99;
  CHECK_THROWS_AS((void)build_subproblem(inst, p, s), DegenerateFraction);
}

TEST_CASE("zero slack cannot be protected") {
  const Regime g{0, "only", 1.0, 1.0, 1.0};
  const Instance inst({{"a", 3.0, 3.0, 0.1, 1.0}}, {g}, std::vector<ConflictEdge>{});
  const SubproblemSolution on = solve_fixed(inst, {}, {true});
  CHECK(on.status == SubproblemStatus::Infeasible);
  CHECK(on.reason == "sla");
  const SubproblemSolution off = solve_fixed(inst, {}, {false});
  CHECK(off.status == SubproblemStatus::Optimal);
}

TEST_CASE("an unreachable tail threshold is infeasible") {
  const Regime g{0, "only", 1.0, 1.0, 1.0};
  const Instance inst({{"a", 3.0, 5.0, 0.1, 1.0}, {"b", 6.0, 8.0, 0.1, 1.0}}, {g},
                      std::vector<ConflictEdge>{});
  DesignParams p;
  p.tail_fraction = 0.5;
  p.tail_threshold = 5.9;  // below the worst access time
  const SubproblemSolution sol = solve_fixed(inst, p, {false, false});
  CHECK(sol.status == SubproblemStatus::Infeasible);
  CHECK(sol.reason == "cvar");
}

TEST_CASE("random subproblems are certified and consistent with evaluation") {
  std::mt19937_64 rng(77);
  rd_test::RandomShape shape;
  shape.max_demands = 10;
  std::bernoulli_distribution coin(0.5);
  int solved = 0;
  for (int k = 0; k < 40; ++k) {
    const Instance inst = rd_test::random_instance(rng, shape);
    const DesignParams p = rd_test::random_params(rng, inst);
    Protection s(inst.num_demands());
    for (int a = 0; a < inst.num_demands(); ++a) s[a] = coin(rng);
    const ConicProgram prog = build_subproblem(inst, p, s);
    const SubproblemSolution sol = solve_subproblem(prog);
    CAPTURE(k);
    REQUIRE(sol.status != SubproblemStatus::NumericalFailure);
    if (sol.status != SubproblemStatus::Optimal) continue;
    ++solved;
    CHECK(sol.kkt.certified());
    const KktSummary again = kkt_residuals(prog, sol);
    CHECK(again.primal_scaled == doctest::Approx(sol.kkt.primal_scaled));
    const Eigen::VectorXd mu = sol.service_rates(prog);
    CHECK(plan_objective(inst, p, mu) == doctest::Approx(sol.objective).epsilon(1e-7));
    ServicePlan plan;
    plan.service_rates = mu;
    plan.protected_demands = s;
    plan.feasible = true;
    // Coverage and conflicts belong to the master; the rest must hold here.
    for (const auto& v : check_feasibility(inst, p, plan).violations)
      CHECK((v.kind == ViolationKind::Coverage || v.kind == ViolationKind::Conflict));
    for (int a = 0; a < inst.num_demands(); ++a)
      for (int r = 0; r < inst.num_regimes(); ++r) {
        const Eigen::Vector3d h = sol.sla_cone_dual(prog, a, r);
        CHECK(dual_cone_contains(h[0], h[1], h[2], 1e-8));
      }
  }
  CHECK(solved > 20);
}
