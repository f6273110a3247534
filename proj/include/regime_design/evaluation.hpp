#pragma once

#include <vector>

#include "regime_design/model.hpp"

namespace regime_design {

/// Relative tolerance used by every feasibility comparison.
inline constexpr double kFeasibilityTolerance = 1e-7;

/// Per-demand E[R_a] at stable rates mu.
[[nodiscard]] Eigen::VectorXd expected_responses(const Instance& instance, const Eigen::VectorXd& mu);

/// Throws DimensionMismatch when the plan does not fit the instance.
[[nodiscard]] PerformanceReport evaluate_plan(const Instance& instance, const DesignParams& params,
                                              const ServicePlan& plan);

struct FeasibilityResult {
  bool feasible = false;
  std::vector<Violation> violations;
};

[[nodiscard]] FeasibilityResult check_feasibility(const Instance& instance,
                                                  const DesignParams& params,
                                                  const ServicePlan& plan);

/// Objective c'mu - kappa sum log(mu - Lambda); +inf if any regime is unstable.
[[nodiscard]] double plan_objective(const Instance& instance, const DesignParams& params,
                                    const Eigen::VectorXd& mu);

}  // namespace regime_design
