#include "regime_design/evaluation.hpp"

#include <cmath>
#include <limits>

#include "regime_design/errors.hpp"
#include "regime_design/performance.hpp"

namespace regime_design {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool exceeds(double lhs, double rhs) {
  return lhs > rhs + kFeasibilityTolerance * std::max(1.0, std::abs(rhs));
}

void check_dimensions(const Instance& instance, const ServicePlan& plan) {
  if (plan.service_rates.size() != instance.num_regimes())
    throw DimensionMismatch("plan has " + std::to_string(plan.service_rates.size()) +
                            " service rates for " + std::to_string(instance.num_regimes()) +
                            " regimes");
  if (static_cast<int>(plan.protected_demands.size()) != instance.num_demands())
    throw DimensionMismatch("plan protects " + std::to_string(plan.protected_demands.size()) +
                            " entries for " + std::to_string(instance.num_demands()) + " demands");
}

}  // namespace

Eigen::VectorXd expected_responses(const Instance& instance, const Eigen::VectorXd& mu) {
  require_stable(mu, instance.arrival_rates());
  const Eigen::VectorXd x = mu - instance.arrival_rates();
  const double queueing = (instance.mixture_weights().array() / x.array()).sum();
  return instance.access_times().array() + queueing;
}

double plan_objective(const Instance& instance, const DesignParams& params,
                      const Eigen::VectorXd& mu) {
  const Eigen::VectorXd x = mu - instance.arrival_rates();
  if ((x.array() <= 0).any()) return kInf;
  double value = instance.unit_costs().dot(mu);
  if (params.congestion_weight > 0) value -= params.congestion_weight * x.array().log().sum();
  return value;
}

PerformanceReport evaluate_plan(const Instance& instance, const DesignParams& params,
                                const ServicePlan& plan) {
  check_dimensions(instance, plan);
  params.validate(instance.num_demands());

  const int n = instance.num_demands();
  const int R = instance.num_regimes();
  const Eigen::VectorXd& lambda = instance.arrival_rates();
  const Eigen::VectorXd& mu = plan.service_rates;
  const Eigen::VectorXd x = mu - lambda;
  const double eps = instance.stability_margin();

  PerformanceReport rep;
  rep.utilizations = lambda.array() / mu.array();
  rep.capacity_cost = instance.unit_costs().dot(mu);

  for (int r = 0; r < R; ++r) {
    if (exceeds(eps, x[r]))
      rep.violations.push_back({ViolationKind::Stability, instance.regime(r).name.empty()
                                                              ? std::to_string(r)
                                                              : instance.regime(r).name,
                                x[r], eps, x[r] - eps});
  }

  const bool stable = (x.array() > 0).all() && mu.allFinite();
  rep.expectations = Eigen::VectorXd::Constant(n, kInf);
  rep.sla_probabilities = Eigen::VectorXd::Zero(n);
  if (stable) {
    rep.congestion_penalty = -params.congestion_weight * x.array().log().sum();
    rep.expectations = expected_responses(instance, mu);
    for (int a = 0; a < n; ++a) {
      const Demand& d = instance.demand(a);
      rep.sla_probabilities[a] =
          1.0 - sla_lhs(d, std::span<const Regime>(instance.regimes()), mu);
    }
  } else {
    rep.congestion_penalty = params.congestion_weight > 0 ? kInf : 0.0;
  }
  rep.objective = rep.capacity_cost + rep.congestion_penalty;
  rep.cvar = stable ? cvar_of_values(rep.expectations, params.tail_fraction) : kInf;

  const Protection& s = plan.protected_demands;
  for (int a = 0; a < n; ++a) {
    const Demand& d = instance.demand(a);
    if (!s[a] || d.sla_trivial()) continue;
    const double lhs = 1.0 - rep.sla_probabilities[a];
    if (exceeds(lhs, d.tolerance))
      rep.violations.push_back({ViolationKind::ServiceLevel, d.id, lhs, d.tolerance,
                                d.tolerance - lhs});
  }

  if (params.weighted_coverage) {
    double total = 0, covered = 0;
    for (int a = 0; a < n; ++a) {
      total += instance.demand(a).weight;
      if (s[a]) covered += instance.demand(a).weight;
    }
    const double rhs = params.coverage * total;
    if (exceeds(rhs, covered))
      rep.violations.push_back({ViolationKind::Coverage, "coverage", covered, rhs, covered - rhs});
  } else {
    const double lhs = count_protected(s);
    const double rhs = required_protected(params.coverage, n);
    if (lhs < rhs)
      rep.violations.push_back({ViolationKind::Coverage, "coverage", lhs, rhs, lhs - rhs});
  }

  for (const auto& e : instance.conflict_edges()) {
    if (s[e.first] && s[e.second])
      rep.violations.push_back({ViolationKind::Conflict,
                                instance.demand(e.first).id + "|" + instance.demand(e.second).id,
                                2.0, 1.0, -1.0});
  }

  if (exceeds(rep.cvar, params.tail_threshold))
    rep.violations.push_back({ViolationKind::TailRisk, "cvar", rep.cvar, params.tail_threshold,
                              params.tail_threshold - rep.cvar});
  return rep;
}

FeasibilityResult check_feasibility(const Instance& instance, const DesignParams& params,
                                    const ServicePlan& plan) {
  PerformanceReport rep = evaluate_plan(instance, params, plan);
  return {rep.violations.empty(), std::move(rep.violations)};
}

}  // namespace regime_design
