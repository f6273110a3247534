#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "regime_design/errors.hpp"
#include "regime_design/exact_solvers.hpp"

namespace regime_design {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Greedy: protect in the given order while conflicts allow, stop once coverage holds.
Protection greedy_protection(const Instance& instance, const DesignParams& params,
                             const std::vector<int>& order) {
  const int n = instance.num_demands();
  Protection s(n, false);
  for (int a : order) {
    if (coverage_satisfied(instance, params, s)) break;
    const Demand& d = instance.demand(a);
    if (!d.sla_trivial() && !(d.slack() > 0)) continue;
    bool ok = true;
    for (int b : instance.neighbours()[a]) ok = ok && !s[b];
    if (ok) s[a] = true;
  }
  return s;
}

}  // namespace

CompactResult compact_solve(const Instance& instance, const DesignParams& params,
                            const CompactOptions& options) {
  if (!(options.gap_tol > 0)) throw DomainError("gap tolerance must be positive");
  params.validate(instance.num_demands());
  const int n = instance.num_demands();

  CompactResult out;
  out.plan.method = "compact";
  out.plan.service_rates = instance.arrival_rates();
  out.plan.protected_demands.assign(n, false);
  out.upper_bound = kInf;

  auto try_incumbent = [&](const Protection& s) {
    if (!coverage_satisfied(instance, params, s) || !conflicts_satisfied(instance, s)) return;
    const SubproblemSolution sol = solve_fixed(instance, params, s, options.subproblem);
    if (sol.status != SubproblemStatus::Optimal || !(sol.objective < out.upper_bound)) return;
    out.upper_bound = sol.objective;
    out.plan = make_plan(instance, s, sol, "compact");
  };

  std::vector<int> by_slack(n);
  std::iota(by_slack.begin(), by_slack.end(), 0);
  std::stable_sort(by_slack.begin(), by_slack.end(), [&](int a, int b) {
    return instance.demand(a).slack() > instance.demand(b).slack();
  });
  try_incumbent(greedy_protection(instance, params, by_slack));

  struct Node {
    double bound;
    int id;
    std::vector<FixState> state;
    RelaxationResult relax;
  };
  auto worse = [](const Node& a, const Node& b) {
    return a.bound > b.bound || (a.bound == b.bound && a.id > b.id);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  int next_id = 0;

  auto prune_level = [&] {
    return out.upper_bound - options.gap_tol * (1.0 + std::abs(out.upper_bound));
  };
  auto push = [&](std::vector<FixState> state) {
    RelaxationResult relax = solve_relaxation(instance, params, state, options.relaxation);
    ++out.nodes;
    if (relax.status == RelaxationResult::Status::Infeasible) return;
    if (relax.status != RelaxationResult::Status::Optimal) {
      std::string fixed;
      for (int a = 0; a < n; ++a)
        fixed += state[a] == FixState::Free ? '*' : state[a] == FixState::On ? '1' : '0';
      throw Error("node relaxation failed at " + fixed + ": " + relax.reason);
    }
    if (relax.objective >= prune_level()) return;
    const double bound = relax.objective;
    open.push({bound, next_id++, std::move(state), std::move(relax)});
  };

  push(std::vector<FixState>(n, FixState::Free));
  if (!open.empty()) {
    // Rounding heuristic on the root relaxation.
    const Eigen::VectorXd& frac = open.top().relax.protection;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    try_incumbent(greedy_protection(instance, params, order));
  }

  double open_bound = kInf;
  while (!open.empty()) {
    if (out.nodes >= options.node_limit) {
      open_bound = open.top().bound;
      break;
    }
    Node node = std::move(const_cast<Node&>(open.top()));
    open.pop();
    if (node.bound >= prune_level()) continue;

    const Eigen::VectorXd& p = node.relax.protection;
    Protection rounded(n, false);
    for (int a = 0; a < n; ++a) rounded[a] = p[a] > 0.5;

    int branch = -1;
    double best = -1;
    for (int a = 0; a < n; ++a) {
      if (node.state[a] != FixState::Free) continue;
      const double f = std::min(p[a], 1.0 - p[a]);
      const bool better = f > best + 1e-12 ||
                          (std::abs(f - best) <= 1e-12 &&
                           instance.demand(a).slack() > instance.demand(branch).slack());
      if (better) {
        best = f;
        branch = a;
      }
    }
    if (branch < 0 || best <= 1e-6) {
      // Integral relaxation: its rounding is a candidate, and tight if Theta matches the bound.
      try_incumbent(rounded);
      const bool tight =
          out.upper_bound <= node.bound + options.gap_tol * (1.0 + std::abs(node.bound));
      if (branch < 0 || tight) continue;
    }

    out.branch_trace.emplace_back(branch, 1);
    auto on = node.state;
    on[branch] = FixState::On;
    push(std::move(on));
    out.branch_trace.emplace_back(branch, 0);
    auto off = node.state;
    off[branch] = FixState::Off;
    push(std::move(off));
  }

  const bool have = std::isfinite(out.upper_bound);
  out.lower_bound = std::min(open_bound, out.upper_bound);
  if (open_bound < kInf) {
    out.status = SolveStatus::LimitReached;
  } else {
    out.status = have ? SolveStatus::Optimal : SolveStatus::Infeasible;
    if (have) out.lower_bound = out.upper_bound;
  }
  return out;
}

}  // namespace regime_design
