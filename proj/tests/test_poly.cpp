#include <doctest.h>

#include <random>

#include "regime_design/errors.hpp"
#include "regime_design/exact_solvers.hpp"
#include "regime_design/poly.hpp"
#include "support.hpp"

using namespace regime_design;

namespace {

const std::vector<Regime> kRegimes = {{0, "x", 1.0, 0.5, 1.0}, {1, "y", 1.0, 0.5, 1.0}};

}  // namespace

TEST_CASE("sort by slack breaks ties by id") {
  const Instance inst({{"b", 1, 3, 0.1, 1}, {"a", 1, 3, 0.1, 1}, {"c", 1, 5, 0.1, 1}, {"d", 1, 2, 0.1, 1}},
                      kRegimes, std::vector<ConflictEdge>{});
  const SortedSelection sel = sort_by_slack(inst, 2);
  CHECK(sel.order == std::vector<int>{2, 1, 0, 3});
  CHECK(sel.selected == Protection{false, true, true, false});
  CHECK(sel.comparisons > 0);
  CHECK_THROWS_AS((void)sort_by_slack(inst, 5), DomainError);
}

TEST_CASE("sorted selection refuses instances outside its scope") {
  const std::vector<Demand> d = {{"a", 1, 3, 0.1, 1}, {"b", 1, 4, 0.2, 1}};
  DesignParams p;
  p.coverage = 0.5;
  const Instance mixed(d, kRegimes, std::vector<ConflictEdge>{});
  CHECK_THROWS_AS((void)solve_conflict_free_uniform(mixed, p), PreconditionError);
  const std::vector<Demand> same = {{"a", 1, 3, 0.1, 1}, {"b", 1, 4, 0.1, 1}};
  const Instance edged(same, kRegimes, std::vector<ConflictEdge>{{0, 1}});
  CHECK_THROWS_AS((void)solve_conflict_free_uniform(edged, p), PreconditionError);
  const Instance ok(same, kRegimes, std::vector<ConflictEdge>{});
  p.weighted_coverage = true;
  CHECK_THROWS_AS((void)solve_conflict_free_uniform(ok, p), PreconditionError);
}

TEST_CASE("sorted selection matches enumeration on uniform tolerances") {
  std::mt19937_64 rng(31);
  rd_test::RandomShape shape;
  shape.edge_probability = 0;
  shape.uniform_alpha = true;
  shape.zero_slack = true;
  for (int k = 0; k < 25; ++k) {
    const Instance inst = rd_test::random_instance(rng, shape);
    const DesignParams p = rd_test::random_params(rng, inst);
    const ServicePlan poly = solve_conflict_free_uniform(inst, p);
    const EnumerateResult en = enumerate_solve(inst, p);
    CAPTURE(k);
    CHECK(poly.feasible == (en.status == SolveStatus::Optimal));
    if (poly.feasible)
      CHECK(poly.objective_value == doctest::Approx(en.plan.objective_value).epsilon(1e-6));
    CHECK(count_protected(poly.protected_demands) == required_protected(p.coverage, inst.num_demands()));
  }
}

TEST_CASE("dominance selection") {
  // c and a dominate b and d in both slack and tolerance.
  const Instance inst({{"a", 1, 5, 0.3, 1}, {"b", 1, 2, 0.1, 1}, {"c", 1, 6, 0.2, 1}, {"d", 1, 3, 0.2, 1}},
                      kRegimes, std::vector<ConflictEdge>{});
  const auto two = dominance_select(inst, 2);
  REQUIRE(two);
  CHECK(*two == std::vector<std::string>{"a", "c"});
  // Adding d keeps dominance over b.
  const auto three = dominance_select(inst, 3);
  REQUIRE(three);
  CHECK(*three == std::vector<std::string>{"a", "c", "d"});
  CHECK_FALSE(dominance_select(inst, 5));

  const Instance crossed({{"a", 1, 5, 0.1, 1}, {"b", 1, 3, 0.3, 1}}, kRegimes,
                         std::vector<ConflictEdge>{});
  CHECK_FALSE(dominance_select(crossed, 1));
  DesignParams p;
  p.coverage = 0.5;
  CHECK_FALSE(solve_dominant(crossed, p));
  const auto plan = solve_dominant(inst, p);
  REQUIRE(plan);
  CHECK(plan->protected_demands == Protection{true, false, true, false});
  CHECK(plan->objective_value == doctest::Approx(enumerate_solve(inst, p).plan.objective_value).epsilon(1e-6));
}
