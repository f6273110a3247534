#include "regime_design/cone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "regime_design/errors.hpp"
#include "regime_design/performance.hpp"
#include "smooth_terms.hpp"

namespace regime_design {

namespace {

constexpr double kE = std::numbers::e;
constexpr double kInf = std::numeric_limits<double>::infinity();

double eval_affine(const AffineExpr& e, const Eigen::VectorXd& v) {
  double acc = e.constant;
  for (const auto& [j, a] : e.terms) acc += a * v[j];
  return acc;
}

double eval_row(const LinearRow& row, const Eigen::VectorXd& v) {
  double acc = row.constant;
  for (const auto& [j, a] : row.terms) acc += a * v[j];
  return acc;
}

AffineExpr var(int j, double coef = 1.0, double constant = 0.0) {
  return AffineExpr{{{j, coef}}, constant};
}

AffineExpr constant_expr(double c) { return AffineExpr{{}, c}; }

/// exp(u) flushed to zero where the result would be subnormal.
double safe_exp(double u) { return u < -700.0 ? 0.0 : std::exp(u); }

}  // namespace

bool exp_cone_contains(double x, double y, double z, double tol) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) return false;
  if (y > tol) return x - y * std::exp(z / y) >= -tol;
  if (y >= -tol) return x >= -tol && z <= tol;
  return false;
}

double exp_cone_violation(double x, double y, double z) {
  if (y > 0) {
    const double q = z / y;
    if (q > 700) return kInf;
    return std::max(0.0, y * std::exp(q) - x);
  }
  return std::max({0.0, -y, -x, z});
}

bool dual_cone_contains(double u, double v, double w, double tol) {
  if (!std::isfinite(u) || !std::isfinite(v) || !std::isfinite(w)) return false;
  if (w < -tol) {
    if (u <= 0) return false;
    const double log_rhs = std::log(-w) + v / w;
    if (log_rhs > 700) return false;
    return kE * u - std::exp(log_rhs) >= -tol;
  }
  if (w <= tol) return u >= -tol && v >= -tol;
  return false;
}

double dual_cone_margin(double u, double v, double w) {
  if (w < 0) {
    const double log_rhs = std::log(-w) + v / w;
    if (log_rhs > 700) return -kInf;
    return kE * u - std::exp(log_rhs);
  }
  if (w == 0) return std::min(u, v);
  return -w;
}

const char* to_string(VariableRole role) {
  switch (role) {
    case VariableRole::ServiceRate: return "service_rate";
    case VariableRole::LogSlack: return "log_slack";
    case VariableRole::TailTerm: return "tail_term";
    case VariableRole::ScaledSlack: return "scaled_slack";
    case VariableRole::InverseSlack: return "inverse_slack";
    case VariableRole::NegLogInverse: return "neg_log_inverse";
    case VariableRole::ResponseBound: return "response_bound";
    case VariableRole::Excess: return "excess";
    case VariableRole::Threshold: return "threshold";
    case VariableRole::Protection: return "protection";
  }
  return "unknown";
}

const char* to_string(RowFamily family) {
  switch (family) {
    case RowFamily::Stability: return "stability";
    case RowFamily::ServiceLevel: return "sla";
    case RowFamily::SlackLink: return "slack_link";
    case RowFamily::Pin: return "pin";
    case RowFamily::Expectation: return "expectation";
    case RowFamily::TailExcess: return "tail_excess";
    case RowFamily::TailBudget: return "tail_budget";
    case RowFamily::LogSum: return "log_sum";
    case RowFamily::Bound: return "bound";
  }
  return "unknown";
}

const char* to_string(ConeFamily family) {
  switch (family) {
    case ConeFamily::ServiceLevel: return "sla";
    case ConeFamily::InverseSlack: return "inverse_slack";
    case ConeFamily::LogSlack: return "log_slack";
  }
  return "unknown";
}

const char* to_string(SubproblemStatus status) {
  switch (status) {
    case SubproblemStatus::Optimal: return "optimal";
    case SubproblemStatus::Infeasible: return "infeasible";
    case SubproblemStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

ConicProgram build_subproblem(const Instance& instance, const DesignParams& params,
                              const Protection& fixed) {
  const int n = instance.num_demands();
  const int R = instance.num_regimes();
  if (static_cast<int>(fixed.size()) != n)
    throw DimensionMismatch("protection vector has " + std::to_string(fixed.size()) +
                            " entries for " + std::to_string(n) + " demands");
  params.validate(n);
  if (params.congestion_weight > 0)
    for (int r = 0; r < R; ++r)
      if (instance.regime(r).unit_cost == 0)
        throw PreconditionError("regime " + std::to_string(r) +
                                " has zero unit cost with a positive congestion weight; the "
                                "program is unbounded");

  ConicProgram p;
  SubproblemData& d = p.data;
  d.arrival = instance.arrival_rates();
  d.weights = instance.mixture_weights();
  d.costs = instance.unit_costs();
  d.access = instance.access_times();
  d.slack = instance.slacks();
  d.tolerance.resize(n);
  for (int a = 0; a < n; ++a) d.tolerance[a] = instance.demand(a).tolerance;
  d.fixed = fixed;
  d.congestion_weight = params.congestion_weight;
  d.stability_margin = instance.stability_margin();
  d.tail_threshold = params.tail_threshold;
  d.tail_count = tail_count(params.tail_fraction, n);

  p.constants["Lambda"] = d.arrival;
  p.constants["pi"] = d.weights;
  p.constants["c"] = d.costs;
  p.constants["kappa"] = Eigen::VectorXd::Constant(1, d.congestion_weight);
  p.constants["epsilon"] = Eigen::VectorXd::Constant(1, d.stability_margin);
  p.constants["alpha"] = d.tolerance;
  p.constants["t"] = d.access;
  p.constants["tstar"] = d.access + d.slack;
  p.constants["beta"] = Eigen::VectorXd::Constant(1, params.coverage);
  p.constants["gamma"] = Eigen::VectorXd::Constant(1, params.tail_fraction);
  p.constants["Gamma"] = Eigen::VectorXd::Constant(1, params.tail_threshold);
  p.constants["K"] = Eigen::VectorXd::Constant(1, d.tail_count);
  Eigen::VectorXd sbar(n);
  for (int a = 0; a < n; ++a) sbar[a] = fixed[a] ? 1.0 : 0.0;
  p.constants["sbar"] = sbar;

  auto& vars = p.variables;
  vars.reserve(4 * R + 2 * n * R + 3 * n + 1);
  auto add_var = [&](std::string name, VariableRole role, int r, int a, double lower) {
    vars.push_back({std::move(name), role, r, a, lower, kInf});
    return static_cast<int>(vars.size()) - 1;
  };
  const std::string re = "]";
  p.mu0 = static_cast<int>(vars.size());
  for (int r = 0; r < R; ++r) add_var("mu[" + std::to_string(r) + re, VariableRole::ServiceRate, r, -1, 0.0);
  p.nu0 = static_cast<int>(vars.size());
  for (int r = 0; r < R; ++r) add_var("nu[" + std::to_string(r) + re, VariableRole::LogSlack, r, -1, -kInf);
  p.tau0 = static_cast<int>(vars.size());
  for (int r = 0; r < R; ++r) add_var("tau[" + std::to_string(r) + re, VariableRole::InverseSlack, r, -1, 0.0);
  p.ell0 = static_cast<int>(vars.size());
  for (int r = 0; r < R; ++r) add_var("ell[" + std::to_string(r) + re, VariableRole::NegLogInverse, r, -1, -kInf);
  p.zeta0 = static_cast<int>(vars.size());
  for (int a = 0; a < n; ++a)
    for (int r = 0; r < R; ++r)
      add_var("zeta[" + std::to_string(a) + "," + std::to_string(r) + re, VariableRole::TailTerm, r, a, -kInf);
  p.u0 = static_cast<int>(vars.size());
  for (int a = 0; a < n; ++a)
    for (int r = 0; r < R; ++r)
      add_var("u[" + std::to_string(a) + "," + std::to_string(r) + re, VariableRole::ScaledSlack, r, a, -kInf);
  p.r0 = static_cast<int>(vars.size());
  for (int a = 0; a < n; ++a) add_var("r[" + std::to_string(a) + re, VariableRole::ResponseBound, -1, a, 0.0);
  p.excess0 = static_cast<int>(vars.size());
  for (int a = 0; a < n; ++a) add_var("U[" + std::to_string(a) + re, VariableRole::Excess, -1, a, 0.0);
  p.eta = add_var("eta", VariableRole::Threshold, -1, -1, 0.0);
  p.pin0 = static_cast<int>(vars.size());
  for (int a = 0; a < n; ++a) {
    const int j = add_var("s[" + std::to_string(a) + re, VariableRole::Protection, -1, a, -kInf);
    vars[j].lower = vars[j].upper = sbar[a];
  }

  p.objective = Eigen::VectorXd::Zero(vars.size());
  for (int r = 0; r < R; ++r) {
    p.objective[p.mu0 + r] = d.costs[r];
    p.objective[p.nu0 + r] = -d.congestion_weight;
  }

  auto& rows = p.rows;
  auto add_row = [&](RowFamily fam, RowSense sense, std::vector<std::pair<int, double>> terms,
                     double constant, int r, int a) {
    rows.push_back({fam, sense, std::move(terms), constant, r, a});
  };
  p.stability_row0 = 0;
  for (int r = 0; r < R; ++r)
    add_row(RowFamily::Stability, RowSense::NonNegative, {{p.mu0 + r, 1.0}},
            -d.arrival[r] - d.stability_margin, r, -1);
  p.sla_row0 = static_cast<int>(rows.size());
  for (int a = 0; a < n; ++a) {
    std::vector<std::pair<int, double>> terms;
    for (int r = 0; r < R; ++r) terms.emplace_back(p.zeta0 + a * R + r, -d.weights[r]);
    add_row(RowFamily::ServiceLevel, RowSense::NonNegative, std::move(terms),
            1.0 + (d.tolerance[a] - 1.0) * sbar[a], -1, a);
  }
  p.link_row0 = static_cast<int>(rows.size());
  for (int a = 0; a < n; ++a)
    for (int r = 0; r < R; ++r)
      add_row(RowFamily::SlackLink, RowSense::Equal,
              {{p.u0 + a * R + r, 1.0}, {p.mu0 + r, d.slack[a]}}, -d.slack[a] * d.arrival[r], r, a);
  p.pin_row0 = static_cast<int>(rows.size());
  for (int a = 0; a < n; ++a)
    add_row(RowFamily::Pin, RowSense::Equal, {{p.pin0 + a, 1.0}}, -sbar[a], -1, a);
  p.expect_row0 = static_cast<int>(rows.size());
  for (int a = 0; a < n; ++a) {
    std::vector<std::pair<int, double>> terms{{p.r0 + a, 1.0}};
    for (int r = 0; r < R; ++r) terms.emplace_back(p.tau0 + r, -d.weights[r]);
    add_row(RowFamily::Expectation, RowSense::NonNegative, std::move(terms), -d.access[a], -1, a);
  }
  p.excess_row0 = static_cast<int>(rows.size());
  for (int a = 0; a < n; ++a)
    add_row(RowFamily::TailExcess, RowSense::NonNegative,
            {{p.excess0 + a, 1.0}, {p.r0 + a, -1.0}, {p.eta, 1.0}}, 0.0, -1, a);
  p.budget_row = static_cast<int>(rows.size());
  {
    std::vector<std::pair<int, double>> terms{{p.eta, -1.0}};
    for (int a = 0; a < n; ++a) terms.emplace_back(p.excess0 + a, -1.0 / d.tail_count);
    add_row(RowFamily::TailBudget, RowSense::NonNegative, std::move(terms), d.tail_threshold, -1, -1);
  }
  p.logsum_row0 = static_cast<int>(rows.size());
  for (int r = 0; r < R; ++r)
    add_row(RowFamily::LogSum, RowSense::NonNegative, {{p.nu0 + r, 1.0}, {p.ell0 + r, 1.0}}, 0.0, r, -1);
  p.bound_row0 = static_cast<int>(rows.size());
  for (int j = 0; j < static_cast<int>(vars.size()); ++j)
    if (vars[j].lower == 0.0 && vars[j].role != VariableRole::Protection)
      add_row(RowFamily::Bound, RowSense::NonNegative, {{j, 1.0}}, 0.0, vars[j].regime, vars[j].demand);

  auto& cones = p.cones;
  p.sla_cone0 = 0;
  for (int a = 0; a < n; ++a)
    for (int r = 0; r < R; ++r)
      cones.push_back({ConeFamily::ServiceLevel,
                       {var(p.zeta0 + a * R + r), var(p.pin0 + a), var(p.u0 + a * R + r)}, r, a});
  p.inverse_cone0 = static_cast<int>(cones.size());
  for (int r = 0; r < R; ++r)
    cones.push_back({ConeFamily::InverseSlack, {var(p.tau0 + r), constant_expr(1.0), var(p.ell0 + r)}, r, -1});
  p.log_cone0 = static_cast<int>(cones.size());
  for (int r = 0; r < R; ++r)
    cones.push_back({ConeFamily::LogSlack,
                     {var(p.mu0 + r, 1.0, -d.arrival[r]), constant_expr(1.0), var(p.nu0 + r)}, r, -1});
  return p;
}

namespace {

/// Fills primal values and multipliers of the full program from the reduced optimum.
void lift(const ConicProgram& p, const Eigen::VectorXd& x, const Eigen::VectorXd& stab_dual,
          const std::vector<int>& sla_demands, const Eigen::VectorXd& sla_mult, double tail_mult,
          SubproblemSolution& sol) {
  const SubproblemData& d = p.data;
  const int R = p.num_regimes();
  const int n = p.num_demands();
  const int K = d.tail_count;

  Eigen::VectorXd& v = sol.primal;
  v = Eigen::VectorXd::Zero(p.num_variables());
  const double queueing = (d.weights.array() / x.array()).sum();
  for (int r = 0; r < R; ++r) {
    v[p.mu0 + r] = d.arrival[r] + x[r];
    v[p.nu0 + r] = std::log(x[r]);
    v[p.tau0 + r] = 1.0 / x[r];
    v[p.ell0 + r] = -std::log(x[r]);
  }
  for (int a = 0; a < n; ++a) {
    for (int r = 0; r < R; ++r) {
      const double u = -d.slack[a] * x[r];
      v[p.u0 + a * R + r] = u;
      v[p.zeta0 + a * R + r] = d.fixed[a] ? safe_exp(u) : 0.0;
    }
    v[p.pin0 + a] = d.fixed[a] ? 1.0 : 0.0;
    v[p.r0 + a] = d.access[a] + queueing;
  }
  // eta is the K-th largest response bound; ties at eta share the remaining tail mass.
  std::vector<double> sorted(d.access.data(), d.access.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + (K - 1), sorted.end(), std::greater<>());
  const double t_k = sorted[K - 1];
  v[p.eta] = t_k + queueing;
  int above = 0, ties = 0;
  for (int a = 0; a < n; ++a) {
    if (d.access[a] > t_k) ++above;
    if (d.access[a] == t_k) ++ties;
    v[p.excess0 + a] = std::max(0.0, d.access[a] - t_k);
  }

  sol.row_duals = Eigen::VectorXd::Zero(p.rows.size());
  sol.cone_duals = Eigen::MatrixXd::Zero(p.cones.size(), 3);
  sol.sla_duals = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& y = sol.row_duals;

  for (int r = 0; r < R; ++r) y[p.stability_row0 + r] = stab_dual[r];

  for (std::size_t k = 0; k < sla_demands.size(); ++k) {
    const int a = sla_demands[k];
    double total = 0;
    for (int r = 0; r < R; ++r) total += d.weights[r] * safe_exp(-d.slack[a] * x[r]);
    // Rows far from binding carry only barrier noise, which dividing by total amplifies.
    const double f = std::log(d.tolerance[a] / total) > 1.0 ? 0.0 : sla_mult[k] / total;
    sol.sla_duals[a] = f;
    y[p.sla_row0 + a] = f;
    double pin = 0;
    for (int r = 0; r < R; ++r) {
      const double u = -d.slack[a] * x[r];
      const double e = safe_exp(u);
      const double scale = f * d.weights[r];
      const Eigen::RowVector3d h(scale, scale * (u - 1.0) * e, -scale * e);
      sol.cone_duals.row(p.sla_cone0 + a * R + r) = h;
      y[p.link_row0 + a * R + r] = -h[2];
      pin -= h[1];
    }
    y[p.pin_row0 + a] = pin;
  }

  const double phi = tail_mult;
  const double share_above = phi / K;
  const double share_tie = ties > 0 ? phi / K * (K - above) / ties : 0.0;
  double used = 0;
  for (int a = 0; a < n; ++a) {
    double lam = 0;
    if (d.access[a] > t_k) lam = share_above;
    else if (d.access[a] == t_k) lam = share_tie;
    used += lam;
    y[p.expect_row0 + a] = lam;
    y[p.excess_row0 + a] = lam;
  }
  y[p.budget_row] = phi;

  for (int r = 0; r < R; ++r) {
    const double xr = x[r];
    const double log_sum = d.weights[r] * phi / xr;
    y[p.logsum_row0 + r] = log_sum;
    const double chi = d.weights[r] * phi;
    const double tau = 1.0 / xr, ell = -std::log(xr);
    sol.cone_duals.row(p.inverse_cone0 + r) = Eigen::RowVector3d(chi, chi * (ell - 1.0) * tau, -chi * tau);
    const double rho = (d.congestion_weight + log_sum) / xr;
    const double nu = std::log(xr);
    sol.cone_duals.row(p.log_cone0 + r) = Eigen::RowVector3d(rho, rho * (nu - 1.0) * xr, -rho * xr);
  }

  // Bound rows: only U_a >= 0 and eta >= 0 carry mass.
  for (int i = p.bound_row0; i < static_cast<int>(p.rows.size()); ++i) {
    const int j = p.rows[i].terms.front().first;
    if (j >= p.excess0 && j < p.excess0 + n) y[i] = share_above - y[p.excess_row0 + (j - p.excess0)];
    else if (j == p.eta) y[i] = phi - used;
  }
  for (int i = p.bound_row0; i < static_cast<int>(p.rows.size()); ++i) y[i] = std::max(0.0, y[i]);

  sol.slack_rates = x;
  sol.objective = p.objective.dot(v);
}

}  // namespace

SubproblemSolution solve_subproblem(const ConicProgram& p, const SubproblemOptions& options) {
  const SubproblemData& d = p.data;
  const int R = p.num_regimes();
  const int n = p.num_demands();
  SubproblemSolution sol;

  std::vector<int> sla_demands;
  for (int a = 0; a < n; ++a) {
    if (!d.fixed[a] || d.tolerance[a] >= 1.0) continue;
    if (!(d.slack[a] > 0)) {
      sol.status = SubproblemStatus::Infeasible;
      sol.reason = "sla";
      return sol;
    }
    sla_demands.push_back(a);
  }
  std::vector<double> access(d.access.data(), d.access.data() + n);
  std::sort(access.begin(), access.end(), std::greater<>());
  double top = 0;
  for (int k = 0; k < d.tail_count; ++k) top += access[k];
  const double budget = d.tail_threshold - top / d.tail_count;
  // The queueing term sum pi / x is strictly positive, so the tail row needs budget > 0.
  if (!(budget > 0)) {
    sol.status = SubproblemStatus::Infeasible;
    sol.reason = "cvar";
    return sol;
  }

  SmoothProblem sp;
  sp.dimension = R;
  sp.objective = detail::rate_objective(d.costs, d.arrival, d.congestion_weight);
  const auto all = detail::iota_support(0, R);
  for (int r = 0; r < R; ++r)
    sp.constraints.push_back(
        detail::linear_constraint({r}, Eigen::VectorXd::Constant(1, -1.0), d.stability_margin));
  for (int a : sla_demands)
    sp.constraints.push_back(
        detail::service_level_constraint(all, d.weights, d.slack[a], d.tolerance[a]));
  const int tail_index = static_cast<int>(sp.constraints.size());
  sp.constraints.push_back(detail::tail_budget_constraint(all, d.weights, budget));

  // Start: one over the median slack, doubled until strictly interior.
  std::vector<double> slacks(d.slack.data(), d.slack.data() + n);
  double median = 1.0;
  if (!slacks.empty()) {
    std::nth_element(slacks.begin(), slacks.begin() + slacks.size() / 2, slacks.end());
    median = slacks[slacks.size() / 2];
  }
  const double base = std::max(d.stability_margin, median > 0 ? 1.0 / median : 1.0);
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(R, base);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::VectorXd g = constraint_values(sp, x0);
    if (g.allFinite() && g.maxCoeff() < 0) break;
    x0 *= 2.0;
  }
  for (int r = 0; r < R; ++r)
    if (d.costs[r] == 0)
      sp.constraints.push_back(detail::linear_constraint(
          {r}, Eigen::VectorXd::Constant(1, 1.0), -options.rate_cap_factor * x0.maxCoeff()));
  {
    const Eigen::VectorXd g = constraint_values(sp, x0);
    if (!g.allFinite() || g.maxCoeff() >= 0) {
      sol.status = SubproblemStatus::NumericalFailure;
      sol.reason = "no interior start";
      return sol;
    }
  }

  const IpmResult res = solve_smooth(sp, x0, options.ipm);
  sol.iterations = res.iterations;
  if (res.status != IpmStatus::Optimal) {
    sol.status = SubproblemStatus::NumericalFailure;
    sol.reason = res.status == IpmStatus::IterationLimit ? "iteration limit" : "line search stalled";
    return sol;
  }

  const Eigen::VectorXd stab = res.multipliers.head(R);
  const Eigen::VectorXd sla = res.multipliers.segment(R, sla_demands.size());
  lift(p, res.x, stab, sla_demands, sla, res.multipliers[tail_index], sol);
  sol.status = SubproblemStatus::Optimal;
  sol.kkt = kkt_residuals(p, sol);
  return sol;
}

KktSummary kkt_residuals(const ConicProgram& p, const SubproblemSolution& sol) {
  KktSummary k;
  const Eigen::VectorXd& v = sol.primal;
  const Eigen::VectorXd& y = sol.row_duals;
  const Eigen::MatrixXd& h = sol.cone_duals;
  if (v.size() != p.num_variables() || y.size() != static_cast<Eigen::Index>(p.rows.size()) ||
      h.rows() != static_cast<Eigen::Index>(p.cones.size()))
    throw DimensionMismatch("solution does not match the program dimensions");

  Eigen::VectorXd grad = p.objective;
  double dual_obj = 0;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const LinearRow& row = p.rows[i];
    const double val = eval_row(row, v);
    const double scale = 1.0 + std::abs(row.constant);
    const double viol = row.sense == RowSense::Equal ? std::abs(val) : std::max(0.0, -val);
    k.primal_residual = std::max(k.primal_residual, viol);
    k.primal_scaled = std::max(k.primal_scaled, viol / scale);
    if (row.sense == RowSense::NonNegative) k.sign_violation = std::max(k.sign_violation, -y[i]);
    k.complementarity += std::abs(y[i] * val);
    for (const auto& [j, a] : row.terms) grad[j] -= y[i] * a;
    dual_obj -= y[i] * row.constant;
  }
  k.dual_cone_margin = kInf;
  for (std::size_t c = 0; c < p.cones.size(); ++c) {
    const ConeBlock& blk = p.cones[c];
    std::array<double, 3> val;
    for (int m = 0; m < 3; ++m) {
      val[m] = eval_affine(blk.coords[m], v);
      for (const auto& [j, a] : blk.coords[m].terms) grad[j] -= h(c, m) * a;
      dual_obj -= h(c, m) * blk.coords[m].constant;
    }
    const double viol = exp_cone_violation(val[0], val[1], val[2]);
    k.primal_cone_violation = std::max(k.primal_cone_violation, viol);
    k.primal_scaled = std::max(k.primal_scaled, viol / (1.0 + std::abs(val[0])));
    k.complementarity += std::abs(h(c, 0) * val[0] + h(c, 1) * val[1] + h(c, 2) * val[2]);
    k.dual_cone_margin = std::min(k.dual_cone_margin, dual_cone_margin(h(c, 0), h(c, 1), h(c, 2)));
  }
  if (p.cones.empty()) k.dual_cone_margin = 0;
  k.primal_residual = std::max(k.primal_residual, k.primal_cone_violation);
  k.dual_residual = grad.lpNorm<Eigen::Infinity>();
  k.dual_scaled = k.dual_residual / (1.0 + p.objective.lpNorm<Eigen::Infinity>());
  const double primal_obj = p.objective.dot(v);
  k.duality_gap = std::abs(primal_obj - dual_obj);
  k.gap_scaled = k.duality_gap / (1.0 + std::abs(primal_obj));
  return k;
}

void dump_program(const ConicProgram& p, std::ostream& out) {
  out.precision(17);
  out << "# regime-design conic program\n";
  out << "VARIABLES " << p.variables.size() << '\n';
  for (std::size_t j = 0; j < p.variables.size(); ++j) {
    const Variable& var = p.variables[j];
    out << j << ' ' << var.name << ' ' << to_string(var.role) << ' ' << var.lower << ' '
        << var.upper << '\n';
  }
  int nnz = 0;
  for (int j = 0; j < p.objective.size(); ++j) nnz += p.objective[j] != 0;
  out << "OBJECTIVE min " << nnz << '\n';
  for (int j = 0; j < p.objective.size(); ++j)
    if (p.objective[j] != 0) out << j << ' ' << p.objective[j] << '\n';
  out << "ROWS " << p.rows.size() << '\n';
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const LinearRow& row = p.rows[i];
    out << i << ' ' << to_string(row.family) << ' '
        << (row.sense == RowSense::Equal ? "eq" : "ge") << ' ' << row.constant << ' '
        << row.terms.size();
    for (const auto& [j, a] : row.terms) out << ' ' << j << ':' << a;
    out << '\n';
  }
  out << "CONES " << p.cones.size() << '\n';
  for (std::size_t c = 0; c < p.cones.size(); ++c) {
    const ConeBlock& blk = p.cones[c];
    out << c << ' ' << to_string(blk.family) << " exp";
    for (const auto& e : blk.coords) {
      out << " | " << e.constant << ' ' << e.terms.size();
      for (const auto& [j, a] : e.terms) out << ' ' << j << ':' << a;
    }
    out << '\n';
  }
  out << "CONSTANTS " << p.constants.size() << '\n';
  for (const auto& [name, values] : p.constants) {
    out << name << ' ' << values.size();
    for (int k = 0; k < values.size(); ++k) out << ' ' << values[k];
    out << '\n';
  }
}

SubproblemSolution solve_fixed(const Instance& instance, const DesignParams& params,
                               const Protection& fixed, const SubproblemOptions& options) {
  return solve_subproblem(build_subproblem(instance, params, fixed), options);
}

}  // namespace regime_design
