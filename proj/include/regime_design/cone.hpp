#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regime_design/ipm.hpp"
#include "regime_design/model.hpp"

namespace regime_design {

/// K_exp = cl{(x, y, z) : y > 0, x >= y exp(z / y)}.
[[nodiscard]] bool exp_cone_contains(double x, double y, double z, double tol = 1e-12);
/// K_exp* = cl{(u, v, w) : w < 0, e u >= -w exp(v / w)}.
[[nodiscard]] bool dual_cone_contains(double u, double v, double w, double tol = 1e-12);
/// Signed distance-like margin of (u, v, w) against K_exp*; >= 0 inside.
[[nodiscard]] double dual_cone_margin(double u, double v, double w);
[[nodiscard]] double exp_cone_violation(double x, double y, double z);

enum class VariableRole {
  ServiceRate,     ///< mu_r
  LogSlack,        ///< nu_r <= log(mu_r - Lambda_r)
  TailTerm,        ///< zeta_ar
  ScaledSlack,     ///< u_ar = -(mu_r - Lambda_r) Delta_a
  InverseSlack,    ///< tau_r >= 1 / (mu_r - Lambda_r)
  NegLogInverse,   ///< ell_r
  ResponseBound,   ///< r_a >= E[R_a]
  Excess,          ///< U_a >= r_a - eta
  Threshold,       ///< eta
  Protection,      ///< pinned s_a
};

[[nodiscard]] const char* to_string(VariableRole role);

struct Variable {
  std::string name;
  VariableRole role;
  int regime = -1;
  int demand = -1;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

enum class RowFamily {
  Stability,
  ServiceLevel,
  SlackLink,
  Pin,
  Expectation,
  TailExcess,
  TailBudget,
  LogSum,
  Bound,
};

[[nodiscard]] const char* to_string(RowFamily family);

enum class RowSense { Equal, NonNegative };

/// sum_j coef_j v_j + constant, with sense "= 0" or ">= 0".
struct LinearRow {
  RowFamily family;
  RowSense sense;
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;
  int regime = -1;
  int demand = -1;
};

struct AffineExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;
};

enum class ConeFamily { ServiceLevel, InverseSlack, LogSlack };

[[nodiscard]] const char* to_string(ConeFamily family);

struct ConeBlock {
  ConeFamily family;
  std::array<AffineExpr, 3> coords;
  int regime = -1;
  int demand = -1;
};

/// Reduced data consumed by the solver; derived from the same instance as the rows.
struct SubproblemData {
  Eigen::VectorXd arrival, weights, costs;
  Eigen::VectorXd access, slack, tolerance;
  Protection fixed;
  double congestion_weight = 0.0;
  double stability_margin = kDefaultStabilityMargin;
  double tail_threshold = kUnboundedTail;
  int tail_count = 1;
};

/// Full exponential-cone program for a fixed protection vector.
struct ConicProgram {
  std::vector<Variable> variables;
  std::vector<LinearRow> rows;
  std::vector<ConeBlock> cones;
  Eigen::VectorXd objective;
  std::map<std::string, Eigen::VectorXd> constants;
  SubproblemData data;

  // Catalog offsets; per-regime and per-(a, r) blocks are contiguous.
  int mu0 = 0, nu0 = 0, tau0 = 0, ell0 = 0, zeta0 = 0, u0 = 0, r0 = 0, excess0 = 0, eta = 0,
      pin0 = 0;
  int stability_row0 = 0, sla_row0 = 0, link_row0 = 0, pin_row0 = 0, expect_row0 = 0,
      excess_row0 = 0, budget_row = 0, logsum_row0 = 0, bound_row0 = 0;
  int sla_cone0 = 0, inverse_cone0 = 0, log_cone0 = 0;

  [[nodiscard]] int num_regimes() const { return static_cast<int>(data.arrival.size()); }
  [[nodiscard]] int num_demands() const { return static_cast<int>(data.slack.size()); }
  [[nodiscard]] int num_variables() const { return static_cast<int>(variables.size()); }
};

enum class SubproblemStatus { Optimal, Infeasible, NumericalFailure };

[[nodiscard]] const char* to_string(SubproblemStatus status);

struct KktSummary {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double sign_violation = 0.0;       ///< negative multipliers on inequality rows
  double complementarity = 0.0;      ///< sum |y_i row_i| + sum |h_k . cone_k|
  double duality_gap = 0.0;          ///< |primal objective - dual objective|
  double dual_cone_margin = 0.0;     ///< min over cone blocks; >= 0 means inside
  double primal_cone_violation = 0.0;
  // Scaled counterparts used for certification.
  double primal_scaled = 0.0;
  double dual_scaled = 0.0;
  double gap_scaled = 0.0;

  [[nodiscard]] bool certified(double tol = 1e-6, double cone_tol = 1e-8) const {
    return primal_scaled <= tol && dual_scaled <= tol && gap_scaled <= tol &&
           sign_violation <= tol && dual_cone_margin >= -cone_tol;
  }
};

struct SubproblemSolution {
  SubproblemStatus status = SubproblemStatus::NumericalFailure;
  std::string reason;  ///< constraint family that proved infeasibility, or the failure cause
  double objective = 0.0;
  Eigen::VectorXd primal;      ///< over the variable catalog
  Eigen::VectorXd row_duals;   ///< y_i, >= 0 on inequality rows
  Eigen::MatrixXd cone_duals;  ///< one row (h1, h2, h3) per cone block
  Eigen::VectorXd sla_duals;   ///< f_a
  Eigen::VectorXd slack_rates; ///< x_r = mu_r - Lambda_r
  int iterations = 0;
  KktSummary kkt;

  [[nodiscard]] Eigen::VectorXd service_rates(const ConicProgram& p) const {
    return primal.segment(p.mu0, p.num_regimes());
  }
  /// h_ar triple of the service-level block for demand a, regime r.
  [[nodiscard]] Eigen::Vector3d sla_cone_dual(const ConicProgram& p, int a, int r) const {
    return cone_duals.row(p.sla_cone0 + a * p.num_regimes() + r).transpose();
  }
};

struct SubproblemOptions {
  IpmOptions ipm;
  /// Multiplier on the largest rate needed by the start point; only used for zero-cost regimes.
  double rate_cap_factor = 1e4;
};

/// Throws DimensionMismatch, DegenerateFraction or PreconditionError.
[[nodiscard]] ConicProgram build_subproblem(const Instance& instance, const DesignParams& params,
                                            const Protection& fixed);

[[nodiscard]] SubproblemSolution solve_subproblem(const ConicProgram& program,
                                                  const SubproblemOptions& options = {});

/// Residuals of (primal, row_duals, cone_duals) against the program.
[[nodiscard]] KktSummary kkt_residuals(const ConicProgram& program,
                                       const SubproblemSolution& solution);

/// Plain-text dump: objective, variables, rows and cone blocks.
void dump_program(const ConicProgram& program, std::ostream& out);

/// Theta(s) evaluated through build + solve.
[[nodiscard]] SubproblemSolution solve_fixed(const Instance& instance, const DesignParams& params,
                                             const Protection& fixed,
                                             const SubproblemOptions& options = {});

// ---------------------------------------------------------------------------
// Continuous relaxation with some protections free in [0, 1].

enum class FixState : signed char { Free = -1, Off = 0, On = 1 };

struct RelaxationResult {
  enum class Status { Optimal, Infeasible, NumericalFailure } status = Status::NumericalFailure;
  double objective = 0.0;
  Eigen::VectorXd slack_rates;
  Eigen::VectorXd protection;  ///< values in [0, 1]; fixed entries exact
  std::string reason;
};

struct RelaxationOptions {
  /// Bounds only need to be valid; the reported objective subtracts the surrogate gap.
  IpmOptions ipm{.gap_tolerance = 1e-9, .residual_tolerance = 1e-8};
  /// Slack added to coverage and conflict rows so that an interior point exists.
  double row_relaxation = 1e-7;
};

[[nodiscard]] RelaxationResult solve_relaxation(const Instance& instance,
                                                const DesignParams& params,
                                                const std::vector<FixState>& state,
                                                const RelaxationOptions& options = {});

}  // namespace regime_design
