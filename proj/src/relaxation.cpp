#include <algorithm>
#include <cmath>

#include "regime_design/cone.hpp"
#include "regime_design/errors.hpp"
#include "regime_design/lp.hpp"
#include "smooth_terms.hpp"

namespace regime_design {

namespace {

RelaxationResult infeasible(std::string reason) {
  RelaxationResult r;
  r.status = RelaxationResult::Status::Infeasible;
  r.reason = std::move(reason);
  return r;
}

}  // namespace

RelaxationResult solve_relaxation(const Instance& instance, const DesignParams& params,
                                  const std::vector<FixState>& state,
                                  const RelaxationOptions& opt) {
  const int n = instance.num_demands();
  const int R = instance.num_regimes();
  if (static_cast<int>(state.size()) != n)
    throw DimensionMismatch("relaxation state does not match the demand count");
  params.validate(n);

  std::vector<FixState> st = state;
  for (int a = 0; a < n; ++a) {
    const Demand& d = instance.demand(a);
    if (!d.sla_trivial() && !(d.slack() > 0)) {
      if (st[a] == FixState::On) return infeasible("sla");
      st[a] = FixState::Off;
    }
  }
  for (const auto& e : instance.conflict_edges()) {
    const FixState u = st[e.first], v = st[e.second];
    if (u == FixState::On && v == FixState::On) return infeasible("conflict");
    if (u == FixState::On && v == FixState::Free) st[e.second] = FixState::Off;
    if (v == FixState::On && u == FixState::Free) st[e.first] = FixState::Off;
  }

  std::vector<double> access(instance.access_times().data(),
                             instance.access_times().data() + n);
  std::sort(access.begin(), access.end(), std::greater<>());
  const int K = tail_count(params.tail_fraction, n);
  double top = 0;
  for (int k = 0; k < K; ++k) top += access[k];
  const double budget = params.tail_threshold - top / K;
  if (!(budget > 0)) return infeasible("cvar");

  std::vector<int> free;
  double need = params.weighted_coverage ? 0.0 : required_protected(params.coverage, n);
  if (params.weighted_coverage) {
    double total = 0;
    for (const auto& d : instance.demands()) total += d.weight;
    need = params.coverage * total;
  }
  for (int a = 0; a < n; ++a) {
    const double w = params.weighted_coverage ? instance.demand(a).weight : 1.0;
    if (st[a] == FixState::On) need -= w;
    if (st[a] == FixState::Free) free.push_back(a);
  }
  const double need_scale = std::max(1.0, std::abs(need));

  if (need <= 1e-12 * need_scale || free.empty()) {
    if (need > 1e-12 * need_scale) return infeasible("coverage");
    Protection fixed(n, false);
    for (int a = 0; a < n; ++a) fixed[a] = st[a] == FixState::On;
    SubproblemOptions sopt;
    sopt.ipm = opt.ipm;
    const SubproblemSolution sol = solve_fixed(instance, params, fixed, sopt);
    RelaxationResult out;
    if (sol.status == SubproblemStatus::Infeasible) return infeasible(sol.reason);
    if (sol.status != SubproblemStatus::Optimal) {
      out.reason = sol.reason;
      return out;
    }
    out.status = RelaxationResult::Status::Optimal;
    out.objective = sol.objective;
    out.slack_rates = sol.slack_rates;
    out.protection = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < n; ++a) out.protection[a] = fixed[a] ? 1.0 : 0.0;
    return out;
  }

  const int F = static_cast<int>(free.size());
  std::vector<int> slot(n, -1);
  for (int k = 0; k < F; ++k) slot[free[k]] = k;
  Eigen::VectorXd wfree(F);
  for (int k = 0; k < F; ++k)
    wfree[k] = params.weighted_coverage ? instance.demand(free[k]).weight : 1.0;

  std::vector<std::pair<int, int>> free_edges;
  for (const auto& e : instance.conflict_edges())
    if (slot[e.first] >= 0 && slot[e.second] >= 0)
      free_edges.emplace_back(slot[e.first], slot[e.second]);

  // Largest achievable coverage over the free demands.
  LpProblem lp;
  lp.cost = -wfree;
  lp.lower = Eigen::VectorXd::Zero(F);
  lp.upper = Eigen::VectorXd::Ones(F);
  lp.A = Eigen::MatrixXd::Zero(free_edges.size(), F);
  lp.rhs = Eigen::VectorXd::Ones(free_edges.size());
  lp.types.assign(free_edges.size(), RowType::LessEqual);
  for (std::size_t i = 0; i < free_edges.size(); ++i) {
    lp.A(i, free_edges[i].first) = 1;
    lp.A(i, free_edges[i].second) = 1;
  }
  const LpResult lps = solve_lp(lp);
  if (lps.status != LpStatus::Optimal) {
    RelaxationResult out;
    out.reason = std::string("coverage lp ") + to_string(lps.status);
    return out;
  }
  const double best = -lps.objective;
  const double delta = opt.row_relaxation * need_scale;
  if (best < need - 0.5 * delta) return infeasible("coverage");

  // When coverage is nearly tight the feasible set collapses onto a face of the
  // conflict polytope; weakening the row keeps an interior and the bound valid.
  const double margin = 1e-3 * need_scale;
  const double need_eff = best - need < margin ? best - margin : need - delta;

  // Mix the LP vertex with the all-1/3 point, which is interior to every conflict row.
  const double third = wfree.sum() / 3.0;
  const double eta = best - third > 0 ? std::min(0.5, 0.5 * (best - need_eff) / (best - third)) : 0.5;
  Eigen::VectorXd s0 = (1.0 - eta) * lps.x.array() + eta / 3.0;

  SmoothProblem sp;
  sp.dimension = R + F;
  const Eigen::VectorXd& weights = instance.mixture_weights();
  sp.objective = detail::rate_objective(instance.unit_costs(), instance.arrival_rates(),
                                        params.congestion_weight);
  const auto rates = detail::iota_support(0, R);
  const double eps = instance.stability_margin();
  for (int r = 0; r < R; ++r)
    sp.constraints.push_back(detail::linear_constraint({r}, Eigen::VectorXd::Constant(1, -1.0), eps));
  for (int a = 0; a < n; ++a) {
    const Demand& d = instance.demand(a);
    if (d.sla_trivial()) continue;
    if (st[a] == FixState::On) {
      sp.constraints.push_back(
          detail::service_level_constraint(rates, weights, d.slack(), d.tolerance));
    } else if (st[a] == FixState::Free) {
      auto sup = rates;
      sup.push_back(R + slot[a]);
      sp.constraints.push_back(
          detail::perspective_service_level(std::move(sup), weights, d.slack(), d.tolerance));
    }
  }
  sp.constraints.push_back(detail::tail_budget_constraint(rates, weights, budget));
  sp.constraints.push_back(
      detail::linear_constraint(detail::iota_support(R, F), -wfree, need_eff));
  for (const auto& [u, v] : free_edges)
    sp.constraints.push_back(
        detail::linear_constraint({R + u, R + v}, Eigen::Vector2d(1, 1), -1.0 - opt.row_relaxation));
  for (int k = 0; k < F; ++k) {
    sp.constraints.push_back(detail::linear_constraint({R + k}, Eigen::VectorXd::Constant(1, -1.0), 0.0));
    sp.constraints.push_back(detail::linear_constraint({R + k}, Eigen::VectorXd::Constant(1, 1.0), -1.0));
  }

  std::vector<double> slacks = std::vector<double>(instance.slacks().data(),
                                                   instance.slacks().data() + n);
  std::nth_element(slacks.begin(), slacks.begin() + n / 2, slacks.end());
  const double median = slacks[n / 2];
  Eigen::VectorXd z0(R + F);
  z0.head(R).setConstant(std::max(eps, median > 0 ? 1.0 / median : 1.0));
  z0.tail(F) = s0;
  for (int k = 0; k < 2000; ++k) {
    const Eigen::VectorXd g = constraint_values(sp, z0);
    if (g.allFinite() && g.maxCoeff() < 0) break;
    z0.head(R) *= 2.0;
  }
  for (int r = 0; r < R; ++r)
    if (instance.unit_costs()[r] == 0)
      sp.constraints.push_back(detail::linear_constraint(
          {r}, Eigen::VectorXd::Constant(1, 1.0), -1e4 * z0.head(R).maxCoeff()));

  RelaxationResult out;
  {
    const Eigen::VectorXd g = constraint_values(sp, z0);
    if (!g.allFinite() || g.maxCoeff() >= 0) {
      out.reason = "no interior start";
      return out;
    }
  }
  const IpmResult res = solve_smooth(sp, z0, opt.ipm);
  if (res.status != IpmStatus::Optimal) {
    out.reason = res.status == IpmStatus::IterationLimit ? "iteration limit" : "line search stalled";
    return out;
  }
  out.status = RelaxationResult::Status::Optimal;
  out.objective = res.objective - res.surrogate_gap;
  out.slack_rates = res.x.head(R);
  out.protection = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < n; ++a) {
    if (st[a] == FixState::On) out.protection[a] = 1.0;
    else if (st[a] == FixState::Free) out.protection[a] = std::clamp(res.x[R + slot[a]], 0.0, 1.0);
  }
  return out;
}

}  // namespace regime_design
