#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <set>

#include "regime_design/errors.hpp"
#include "regime_design/exact_solvers.hpp"
#include "regime_design/lp.hpp"

namespace regime_design {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::LimitReached: return "limit";
  }
  return "unknown";
}

const char* to_string(CutKind kind) {
  return kind == CutKind::Optimality ? "optimality" : "feasibility";
}

double Cut::bound_at(const Protection& s) const {
  double acc = value;
  for (int a = 0; a < coefficients.size(); ++a)
    acc += coefficients[a] * ((s[a] ? 1.0 : 0.0) - (reference[a] ? 1.0 : 0.0));
  return acc;
}

bool Cut::admits(const Protection& s, double theta, double tol) const {
  if (kind == CutKind::Optimality) return theta >= bound_at(s) - tol * (1.0 + std::abs(theta));
  int support = 0, hit = 0;
  for (std::size_t a = 0; a < reference.size(); ++a) {
    if (!reference[a]) continue;
    ++support;
    if (s[a]) ++hit;
  }
  return hit <= support - 1;
}

Cut optimality_cut(const Protection& reference, const SubproblemSolution& solution,
                   const Instance& instance) {
  const int n = instance.num_demands();
  const int R = instance.num_regimes();
  if (solution.status != SubproblemStatus::Optimal)
    throw PreconditionError("optimality cut needs an optimal subproblem solution");
  if (solution.cone_duals.rows() < static_cast<Eigen::Index>(n) * R ||
      solution.sla_duals.size() != n)
    throw PreconditionError("subproblem solution is missing service-level duals");
  Cut cut;
  cut.kind = CutKind::Optimality;
  cut.reference = reference;
  cut.value = solution.objective;
  cut.coefficients.resize(n);
  for (int a = 0; a < n; ++a) {
    double q = (1.0 - instance.demand(a).tolerance) * solution.sla_duals[a];
    for (int r = 0; r < R; ++r) q -= solution.cone_duals(a * R + r, 1);
    cut.coefficients[a] = q;
  }
  return cut;
}

namespace {

// Coefficients at noise level make the master LP ill-conditioned. Each dropped term
// q_a (s_a - r_a) is replaced by its smallest value over s_a in {0, 1}.
void drop_negligible(Cut& cut) {
  const double tol = 1e-9 * std::max(1.0, cut.coefficients.cwiseAbs().maxCoeff());
  for (Eigen::Index a = 0; a < cut.coefficients.size(); ++a) {
    double& q = cut.coefficients[a];
    if (q == 0 || std::abs(q) > tol) continue;
    cut.value -= cut.reference[a] ? std::max(q, 0.0) : std::max(-q, 0.0);
    q = 0;
  }
}

}  // namespace

Cut strengthen_cut(const Cut& cut, double floor) {
  if (cut.kind != CutKind::Optimality) return cut;
  // Theta only grows when demands are added, so coefficients outside the reference
  // can be dropped and no coefficient needs to exceed value - floor.
  Cut out = cut;
  const double cap = std::max(0.0, cut.value - floor);
  for (Eigen::Index a = 0; a < out.coefficients.size(); ++a)
    out.coefficients[a] = cut.reference[a] ? std::clamp(cut.coefficients[a], 0.0, cap) : 0.0;
  return out;
}

Cut feasibility_cut(const Protection& reference) {
  Cut cut;
  cut.kind = CutKind::Feasibility;
  cut.reference = reference;
  cut.coefficients = Eigen::VectorXd::Zero(reference.size());
  for (std::size_t a = 0; a < reference.size(); ++a)
    if (reference[a]) cut.coefficients[a] = 1.0;
  cut.value = cut.coefficients.sum() - 1.0;
  return cut;
}

MasterResult master_solve(const Instance& instance, const DesignParams& params,
                          const std::vector<Cut>& cuts, double theta_lb,
                          const MasterOptions& options) {
  const int n = instance.num_demands();
  const int theta = n;
  const auto& edges = instance.conflict_edges();
  const int m = 1 + static_cast<int>(edges.size()) + static_cast<int>(cuts.size());

  LpProblem lp;
  lp.cost = Eigen::VectorXd::Zero(n + 1);
  lp.cost[theta] = 1.0;
  lp.lower = Eigen::VectorXd::Zero(n + 1);
  lp.upper = Eigen::VectorXd::Ones(n + 1);
  lp.lower[theta] = theta_lb;
  lp.upper[theta] = kInf;
  lp.A = Eigen::MatrixXd::Zero(m, n + 1);
  lp.rhs.resize(m);
  lp.types.resize(m);

  int row = 0;
  if (params.weighted_coverage) {
    double total = 0;
    for (int a = 0; a < n; ++a) {
      lp.A(row, a) = instance.demand(a).weight;
      total += instance.demand(a).weight;
    }
    lp.rhs[row] = params.coverage * total * (1 - 1e-12);
  } else {
    lp.A.row(row).head(n).setOnes();
    lp.rhs[row] = required_protected(params.coverage, n);
  }
  lp.types[row++] = RowType::GreaterEqual;
  for (const auto& e : edges) {
    lp.A(row, e.first) = 1;
    lp.A(row, e.second) = 1;
    lp.rhs[row] = 1;
    lp.types[row++] = RowType::LessEqual;
  }
  for (const auto& cut : cuts) {
    if (cut.kind == CutKind::Optimality) {
      // theta - q's >= value - q's_ref
      lp.A(row, theta) = 1.0;
      lp.A.row(row).head(n) = -cut.coefficients.transpose();
      double ref = 0;
      for (int a = 0; a < n; ++a) ref += cut.coefficients[a] * (cut.reference[a] ? 1.0 : 0.0);
      lp.rhs[row] = cut.value - ref;
      lp.types[row++] = RowType::GreaterEqual;
    } else {
      lp.A.row(row).head(n) = cut.coefficients.transpose();
      lp.rhs[row] = cut.value;
      lp.types[row++] = RowType::LessEqual;
    }
  }

  struct Node {
    double bound;
    int id;
    Eigen::VectorXd lower, upper, x;
  };
  // Equal bounds are common while theta sits at its floor; diving on ties (newest
  // node first) finds an incumbent instead of sweeping the tree level by level.
  auto worse = [](const Node& a, const Node& b) {
    return a.bound > b.bound || (a.bound == b.bound && a.id < b.id);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);

  MasterResult best;
  double incumbent = options.cutoff;
  int next_id = 0;

  auto is_valid = [&](const Protection& s, double& value) {
    if (!coverage_satisfied(instance, params, s) || !conflicts_satisfied(instance, s)) return false;
    value = theta_lb;
    for (const auto& cut : cuts) {
      if (cut.kind == CutKind::Feasibility) {
        if (!cut.admits(s)) return false;
      } else {
        value = std::max(value, cut.bound_at(s));
      }
    }
    return true;
  };

  auto process = [&](const Eigen::VectorXd& lo, const Eigen::VectorXd& up) {
    LpProblem node = lp;
    node.lower.head(n) = lo;
    node.upper.head(n) = up;
    const LpResult res = solve_lp(node);
    ++best.nodes;
    if (res.status == LpStatus::Infeasible) return;
    if (res.status != LpStatus::Optimal)
      throw Error(std::string("master relaxation ") + to_string(res.status));
    if (res.objective >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) return;
    open.push({res.objective, next_id++, lo, up, res.x});
  };

  process(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n));
  while (!open.empty()) {
    if (best.nodes >= options.node_limit) throw LimitError("master node limit reached");
    Node node = open.top();
    open.pop();
    if (node.bound >= incumbent - 1e-9 * (1.0 + std::abs(incumbent))) continue;

    const Eigen::VectorXd& x = node.x;
    int branch = -1;
    double frac = options.integrality;
    for (int a = 0; a < n; ++a) {
      const double f = std::min(x[a], 1.0 - x[a]);
      if (f > frac + 1e-12) {
        frac = f;
        branch = a;
      }
    }
    if (branch < 0) {
      Protection s(n);
      for (int a = 0; a < n; ++a) s[a] = x[a] > 0.5;
      double value;
      if (is_valid(s, value)) {
        if (value < incumbent) {
          incumbent = value;
          best.feasible = true;
          best.proposal = s;
          best.theta = value;
        }
        continue;
      }
      // Rounding broke a row; fall back to the first free coordinate.
      for (int a = 0; a < n; ++a)
        if (node.lower[a] != node.upper[a]) {
          branch = a;
          break;
        }
      if (branch < 0) continue;
    }
    Eigen::VectorXd up0 = node.upper, lo1 = node.lower;
    up0[branch] = 0;
    lo1[branch] = 1;
    process(node.lower, up0);
    process(lo1, node.upper);
  }
  return best;
}

BendersResult benders_solve(const Instance& instance, const DesignParams& params,
                            const BendersOptions& options) {
  if (!(options.gap_tol > 0)) throw DomainError("gap tolerance must be positive");
  params.validate(instance.num_demands());
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  const int n = instance.num_demands();
  BendersResult out;
  BendersState& st = out.state;
  out.plan.method = "benders";
  out.plan.service_rates = instance.arrival_rates();
  out.plan.protected_demands.assign(n, false);

  // Master feasibility first: coverage against conflicts alone.
  MasterOptions probe_opt = options.master;
  probe_opt.cutoff = kInf;
  const MasterResult probe = master_solve(instance, params, {}, 0.0, probe_opt);
  if (!probe.feasible) {
    st.status = SolveStatus::Infeasible;
    return out;
  }

  const Protection none(n, false);
  const SubproblemSolution base = solve_fixed(instance, params, none, options.subproblem);
  ++st.subproblem_solves;
  if (base.status == SubproblemStatus::Infeasible) {
    st.status = SolveStatus::Infeasible;
    return out;
  }
  if (base.status != SubproblemStatus::Optimal)
    throw Error("subproblem at s = 0 failed: " + base.reason);
  const double theta_lb = base.objective;
  st.lower_bound = theta_lb;
  st.upper_bound = kInf;

  std::set<std::vector<bool>> seen;
  for (int it = 1; it <= options.max_iter; ++it) {
    st.iterations = it;
    MasterOptions mopt = options.master;
    const double cutoff =
        std::isfinite(st.upper_bound)
            ? st.upper_bound - options.gap_tol * (1.0 + std::abs(st.upper_bound))
            : kInf;
    mopt.cutoff = std::min(mopt.cutoff, cutoff);
    MasterResult mr;
    try {
      mr = master_solve(instance, params, st.cuts, theta_lb, mopt);
    } catch (const LimitError&) {
      st.status = SolveStatus::LimitReached;
      break;
    }
    if (!mr.feasible) {
      // Nothing beats the cutoff: the incumbent is within the gap tolerance.
      st.status = st.incumbent ? SolveStatus::Optimal : SolveStatus::Infeasible;
      if (st.incumbent) st.lower_bound = std::max(st.lower_bound, std::min(cutoff, st.upper_bound));
      break;
    }
    st.lower_bound = std::max(st.lower_bound, mr.theta);

    IterationRecord rec;
    rec.iteration = it;
    rec.proposal = mr.proposal;
    if (!seen.insert(mr.proposal).second) {
      // A repeated proposal already carries its own cut, so theta >= Theta(s) >= UB.
      st.lower_bound = std::max(st.lower_bound, std::min(mr.theta, st.upper_bound));
      rec.lower_bound = st.lower_bound;
      rec.upper_bound = st.upper_bound;
      rec.gap = std::max(0.0, st.upper_bound - st.lower_bound);
      rec.wall_ms = elapsed_ms();
      rec.cut_kind = CutKind::Optimality;
      st.log.push_back(rec);
      st.status = SolveStatus::Optimal;
      break;
    }

    const SubproblemSolution sol = solve_fixed(instance, params, mr.proposal, options.subproblem);
    ++st.subproblem_solves;
    rec.subproblem_status = sol.status;
    if (sol.status == SubproblemStatus::Optimal) {
      Cut cut = optimality_cut(mr.proposal, sol, instance);
      if (options.strengthen_cuts) cut = strengthen_cut(cut, theta_lb);
      drop_negligible(cut);
      cut.iteration = it;
      st.cuts.push_back(std::move(cut));
      rec.cut_kind = CutKind::Optimality;
      rec.subproblem_value = sol.objective;
      if (sol.objective < st.upper_bound) {
        st.upper_bound = sol.objective;
        st.incumbent = make_plan(instance, mr.proposal, sol, "benders");
      }
    } else if (sol.status == SubproblemStatus::Infeasible) {
      Cut cut = feasibility_cut(mr.proposal);
      cut.iteration = it;
      st.cuts.push_back(std::move(cut));
      rec.cut_kind = CutKind::Feasibility;
      rec.subproblem_value = kInf;
    } else {
      throw Error("subproblem failed at iteration " + std::to_string(it) + ": " + sol.reason);
    }
    rec.lower_bound = st.lower_bound;
    rec.upper_bound = st.upper_bound;
    rec.gap = st.upper_bound - st.lower_bound;
    rec.wall_ms = elapsed_ms();
    st.log.push_back(rec);
    if (std::isfinite(st.upper_bound) &&
        st.upper_bound - st.lower_bound <= options.gap_tol * (1.0 + std::abs(st.upper_bound))) {
      st.status = SolveStatus::Optimal;
      break;
    }
  }
  if (st.incumbent) out.plan = *st.incumbent;
  return out;
}

void write_iteration_csv(const BendersState& state, std::ostream& out) {
  out.precision(12);
  out << "iter,LB,UB,gap,cut_kind,subproblem_status,wall_ms\n";
  for (const auto& r : state.log)
    out << r.iteration << ',' << r.lower_bound << ',' << r.upper_bound << ',' << r.gap << ','
        << to_string(r.cut_kind) << ',' << to_string(r.subproblem_status) << ',' << r.wall_ms
        << '\n';
}

ServicePlan make_plan(const Instance& instance, const Protection& s,
                      const SubproblemSolution& solution, std::string method) {
  ServicePlan plan;
  plan.service_rates = instance.arrival_rates() + solution.slack_rates;
  plan.protected_demands = s;
  plan.objective_value = solution.objective;
  plan.feasible = true;
  plan.method = std::move(method);
  return plan;
}

}  // namespace regime_design
