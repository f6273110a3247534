#include "regime_design/report.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "regime_design/errors.hpp"
#include "regime_design/evaluation.hpp"
#include "regime_design/performance.hpp"

namespace regime_design {

double relative_change(double base, double value) {
  if (base == 0) {
    if (value == 0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), value);
  }
  return 100.0 * (value - base) / std::abs(base);
}

const DeviationRow& DeviationReport::row(const std::string& metric) const {
  for (const auto& r : rows)
    if (r.metric == metric) return r;
  throw DomainError("report has no metric '" + metric + "'");
}

namespace {

struct Summary {
  double mean, sd, max, queueing, cvar, utilization, cost;
};

Summary summarize(const Instance& instance, const DesignParams& params, const Eigen::VectorXd& mu,
                  Eigen::VectorXd& expectations) {
  expectations = expected_responses(instance, mu);
  const double n = static_cast<double>(expectations.size());
  Summary s;
  s.mean = expectations.mean();
  s.sd = std::sqrt((expectations.array() - s.mean).square().sum() / n);
  s.max = expectations.maxCoeff();
  s.queueing = s.mean - instance.access_times().mean();
  s.cvar = cvar_of_values(expectations, params.tail_fraction);
  s.utilization = (instance.arrival_rates().array() / mu.array()).mean();
  s.cost = instance.unit_costs().dot(mu);
  return s;
}

}  // namespace

DeviationReport deviation_report(const Instance& instance, const DesignParams& params,
                                 const ServicePlan& baseline, const ServicePlan& optimal) {
  for (const ServicePlan* p : {&baseline, &optimal}) {
    if (p->service_rates.size() != instance.num_regimes() ||
        static_cast<int>(p->protected_demands.size()) != instance.num_demands())
      throw DimensionMismatch("plan '" + p->method + "' does not fit the instance");
  }
  DeviationReport out;
  for (const auto& d : instance.demands()) out.demand_ids.push_back(d.id);
  const Summary b = summarize(instance, params, baseline.service_rates, out.baseline_expectations);
  const Summary o = summarize(instance, params, optimal.service_rates, out.optimal_expectations);
  auto add = [&](const char* name, double base, double value) {
    out.rows.push_back({name, base, value, relative_change(base, value)});
  };
  add("response_mean", b.mean, o.mean);
  add("response_sd", b.sd, o.sd);
  add("response_max", b.max, o.max);
  add("queueing_mean", b.queueing, o.queueing);
  add("cvar", b.cvar, o.cvar);
  add("mean_utilization", b.utilization, o.utilization);
  add("capacity_cost", b.cost, o.cost);
  return out;
}

void write_deviation_csv(const DeviationReport& report, const std::string& label,
                         std::ostream& out, bool header) {
  out.precision(12);
  if (header) out << "label,metric,baseline,optimal,relative_change_pct\n";
  for (const auto& r : report.rows)
    out << label << ',' << r.metric << ',' << r.baseline << ',' << r.optimal << ','
        << r.relative_change_pct << '\n';
}

void write_paired_csv(const DeviationReport& report, std::ostream& out) {
  out.precision(12);
  out << "demand_id,baseline_expected_response,optimal_expected_response\n";
  for (std::size_t a = 0; a < report.demand_ids.size(); ++a)
    out << report.demand_ids[a] << ',' << report.baseline_expectations[a] << ','
        << report.optimal_expectations[a] << '\n';
}

}  // namespace regime_design
