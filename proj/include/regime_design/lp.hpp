#pragma once

#include <Eigen/Dense>

#include <vector>

namespace regime_design {

enum class RowType { LessEqual, GreaterEqual, Equal };

/// min c'x  s.t.  A x (<=, >=, =) b,  lower <= x <= upper (entries may be infinite).
struct LpProblem {
  Eigen::VectorXd cost;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  std::vector<RowType> types;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

[[nodiscard]] const char* to_string(LpStatus status);

struct LpOptions {
  double tolerance = 1e-9;
  int max_pivots = 50000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 50;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

/// Two-phase bounded-variable primal simplex on a dense tableau.
[[nodiscard]] LpResult solve_lp(const LpProblem& problem, const LpOptions& options = {});

}  // namespace regime_design
