#include "regime_design/poly.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "regime_design/errors.hpp"
#include "regime_design/exact_solvers.hpp"

namespace regime_design {

namespace {

ServicePlan solve_selection(const Instance& instance, const DesignParams& params,
                            const Protection& s, const SubproblemOptions& options,
                            std::string method) {
  const SubproblemSolution sol = solve_fixed(instance, params, s, options);
  if (sol.status == SubproblemStatus::Optimal) return make_plan(instance, s, sol, std::move(method));
  if (sol.status == SubproblemStatus::NumericalFailure)
    throw Error("subproblem failed: " + sol.reason);
  ServicePlan plan;
  plan.service_rates = instance.arrival_rates();
  plan.protected_demands = s;
  plan.objective_value = std::numeric_limits<double>::infinity();
  plan.method = std::move(method);
  return plan;
}

void require_cardinality(const DesignParams& params, int n) {
  params.validate(n);
  if (params.weighted_coverage)
    throw PreconditionError("weighted coverage needs an exact solver");
}

}  // namespace

SortedSelection sort_by_slack(const Instance& instance, int k) {
  const int n = instance.num_demands();
  if (k < 0 || k > n) throw DomainError("selection size out of range");
  SortedSelection sel;
  sel.k = k;
  sel.order.resize(n);
  std::iota(sel.order.begin(), sel.order.end(), 0);
  long calls = 0;
  std::sort(sel.order.begin(), sel.order.end(), [&](int a, int b) {
    ++calls;
    const Demand& da = instance.demand(a);
    const Demand& db = instance.demand(b);
    if (da.slack() != db.slack()) return da.slack() > db.slack();
    return da.id < db.id;
  });
  sel.comparisons = calls;
  sel.selected.assign(n, false);
  for (int i = 0; i < k; ++i) sel.selected[sel.order[i]] = true;
  return sel;
}

ServicePlan solve_conflict_free_uniform(const Instance& instance, const DesignParams& params,
                                        const SubproblemOptions& options) {
  const int n = instance.num_demands();
  if (!instance.conflict_free())
    throw PreconditionError("conflict-free procedure called with conflict edges");
  if (!instance.uniform_tolerance())
    throw PreconditionError("conflict-free procedure needs a uniform tolerance");
  require_cardinality(params, n);
  const SortedSelection sel = sort_by_slack(instance, required_protected(params.coverage, n));
  return solve_selection(instance, params, sel.selected, options, "poly");
}

std::optional<std::vector<std::string>> dominance_select(const Instance& instance, int k) {
  const int n = instance.num_demands();
  if (k < 0 || k > n) return std::nullopt;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // If any dominating set exists, this lexicographic top-k is one.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Demand& da = instance.demand(a);
    const Demand& db = instance.demand(b);
    if (da.slack() != db.slack()) return da.slack() > db.slack();
    if (da.tolerance != db.tolerance) return da.tolerance > db.tolerance;
    return da.id < db.id;
  });
  double min_slack = std::numeric_limits<double>::infinity(), min_tol = min_slack;
  for (int i = 0; i < k; ++i) {
    min_slack = std::min(min_slack, instance.demand(order[i]).slack());
    min_tol = std::min(min_tol, instance.demand(order[i]).tolerance);
  }
  for (int i = k; i < n; ++i) {
    const Demand& d = instance.demand(order[i]);
    if (d.slack() > min_slack || d.tolerance > min_tol) return std::nullopt;
  }
  std::vector<int> chosen(order.begin(), order.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::string> ids;
  for (int a : chosen) ids.push_back(instance.demand(a).id);
  return ids;
}

std::optional<ServicePlan> solve_dominant(const Instance& instance, const DesignParams& params,
                                          const SubproblemOptions& options) {
  const int n = instance.num_demands();
  if (!instance.conflict_free())
    throw PreconditionError("dominance procedure called with conflict edges");
  require_cardinality(params, n);
  const auto ids = dominance_select(instance, required_protected(params.coverage, n));
  if (!ids) return std::nullopt;
  Protection s(n, false);
  for (const auto& id : *ids) s[*instance.index_of(id)] = true;
  return solve_selection(instance, params, s, options, "dominance");
}

}  // namespace regime_design
