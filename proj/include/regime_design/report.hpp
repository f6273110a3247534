#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "regime_design/model.hpp"

namespace regime_design {

/// 100 (new - base) / base; 0 when both are 0, +-inf when only base is 0.
[[nodiscard]] double relative_change(double base, double value);

struct DeviationRow {
  std::string metric;
  double baseline = 0.0;
  double optimal = 0.0;
  double relative_change_pct = 0.0;
};

/// Metrics, in order: response_mean, response_sd, response_max, queueing_mean
/// (E[R] - t_a averaged over demands), cvar, mean_utilization, capacity_cost.
/// Negative changes mean the optimal plan lowers the metric.
struct DeviationReport {
  std::vector<DeviationRow> rows;
  std::vector<std::string> demand_ids;
  Eigen::VectorXd baseline_expectations;
  Eigen::VectorXd optimal_expectations;

  [[nodiscard]] const DeviationRow& row(const std::string& metric) const;
};

/// Both plans must fit the instance and be stable; throws DimensionMismatch otherwise.
[[nodiscard]] DeviationReport deviation_report(const Instance& instance, const DesignParams& params,
                                               const ServicePlan& baseline,
                                               const ServicePlan& optimal);

/// Columns: label, metric, baseline, optimal, relative_change_pct. The label (for
/// example "BRONX/night/BAL") lets several reports share one file.
void write_deviation_csv(const DeviationReport& report, const std::string& label,
                         std::ostream& out, bool header = true);
/// Columns: demand_id, baseline_expected_response, optimal_expected_response.
void write_paired_csv(const DeviationReport& report, std::ostream& out);

}  // namespace regime_design
