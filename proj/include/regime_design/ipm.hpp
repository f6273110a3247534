#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace regime_design {

/// Convex constraint g(x) <= 0 that only reads the coordinates in `support`.
/// `eval` receives the gathered local point and fills value, gradient and Hessian
/// (both local, sized like support). Returning a non-finite value marks the point
/// as outside the domain.
struct LocalConstraint {
  std::vector<int> support;
  std::function<void(const Eigen::VectorXd& local, double& value, Eigen::VectorXd& gradient,
                     Eigen::MatrixXd& hessian)>
      eval;
};

struct SmoothProblem {
  int dimension = 0;
  std::function<void(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& gradient,
                     Eigen::MatrixXd& hessian)>
      objective;
  std::vector<LocalConstraint> constraints;
};

struct IpmOptions {
  double barrier_growth = 10.0;
  double gap_tolerance = 1e-11;       ///< relative to 1 + |f|
  double residual_tolerance = 1e-10;  ///< relative to 1 + |grad f|
  int max_iterations = 200;
  double armijo = 0.01;
  double backtrack = 0.5;
};

enum class IpmStatus { Optimal, IterationLimit, NumericalFailure };

struct IpmResult {
  IpmStatus status = IpmStatus::NumericalFailure;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;   ///< one per constraint, >= 0
  Eigen::VectorXd constraint_values;
  double objective = 0.0;
  double surrogate_gap = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

/// Primal-dual interior-point method for min f(x) s.t. g_i(x) <= 0. `x0` must be
/// strictly feasible.
[[nodiscard]] IpmResult solve_smooth(const SmoothProblem& problem, const Eigen::VectorXd& x0,
                                     const IpmOptions& options = {});

/// Value of every constraint at x. Non-finite entries mean x is outside a domain.
[[nodiscard]] Eigen::VectorXd constraint_values(const SmoothProblem& problem,
                                                const Eigen::VectorXd& x);

}  // namespace regime_design
