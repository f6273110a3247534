#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "regime_design/cone.hpp"
#include "regime_design/model.hpp"

namespace regime_design {

enum class SolveStatus { Optimal, Infeasible, LimitReached };

[[nodiscard]] const char* to_string(SolveStatus status);

enum class CutKind { Optimality, Feasibility };

[[nodiscard]] const char* to_string(CutKind kind);

/// Optimality: theta >= value + sum_a q_a (s_a - reference_a).
/// Feasibility: sum_{a : reference_a} s_a <= |reference| - 1.
struct Cut {
  CutKind kind = CutKind::Optimality;
  Eigen::VectorXd coefficients;
  double value = 0.0;
  Protection reference;
  int iteration = 0;

  /// Right-hand side of the optimality cut at s.
  [[nodiscard]] double bound_at(const Protection& s) const;
  /// True when the binary point s (with master value theta) satisfies the cut.
  [[nodiscard]] bool admits(const Protection& s, double theta = 0.0, double tol = 1e-9) const;
};

/// q_a = (1 - alpha_a) f_a - sum_r h2_ar. Throws PreconditionError if duals are missing.
[[nodiscard]] Cut optimality_cut(const Protection& reference, const SubproblemSolution& solution,
                                 const Instance& instance);
[[nodiscard]] Cut feasibility_cut(const Protection& reference);
/// Valid for binary points because Theta is nondecreasing in s: keeps reference
/// coefficients clamped to [0, value - floor] and zeroes the rest. floor <= Theta(0).
[[nodiscard]] Cut strengthen_cut(const Cut& cut, double floor);

struct MasterResult {
  bool feasible = false;
  Protection proposal;
  double theta = 0.0;
  int nodes = 0;
};

struct MasterOptions {
  int node_limit = 1000000;
  double integrality = 1e-6;
  /// Only points with theta below this are of interest; none found means infeasible.
  double cutoff = std::numeric_limits<double>::infinity();
};

/// Best-first branch-and-bound on the linear relaxation of the master.
[[nodiscard]] MasterResult master_solve(const Instance& instance, const DesignParams& params,
                                        const std::vector<Cut>& cuts, double theta_lb,
                                        const MasterOptions& options = {});

struct IterationRecord {
  int iteration = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  CutKind cut_kind = CutKind::Optimality;
  SubproblemStatus subproblem_status = SubproblemStatus::Optimal;
  double wall_ms = 0.0;
  Protection proposal;
  double subproblem_value = 0.0;
};

struct BendersState {
  std::vector<Cut> cuts;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::optional<ServicePlan> incumbent;
  int iterations = 0;  ///< master solves; the last one may close the gap without a log row
  int subproblem_solves = 0;
  std::vector<IterationRecord> log;
  SolveStatus status = SolveStatus::LimitReached;
};

struct BendersOptions {
  double gap_tol = 1e-5;
  int max_iter = 2000;
  bool strengthen_cuts = true;
  SubproblemOptions subproblem;
  MasterOptions master;
};

struct BendersResult {
  ServicePlan plan;
  BendersState state;
};

[[nodiscard]] BendersResult benders_solve(const Instance& instance, const DesignParams& params,
                                          const BendersOptions& options = {});

/// Iteration CSV: iter, LB, UB, gap, cut_kind, subproblem_status, wall_ms.
void write_iteration_csv(const BendersState& state, std::ostream& out);

struct CompactOptions {
  double gap_tol = 1e-5;
  int node_limit = 100000;
  RelaxationOptions relaxation;
  SubproblemOptions subproblem;
};

struct CompactResult {
  ServicePlan plan;
  SolveStatus status = SolveStatus::LimitReached;
  int nodes = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  /// Branching decisions in order: (demand, value).
  std::vector<std::pair<int, int>> branch_trace;
};

[[nodiscard]] CompactResult compact_solve(const Instance& instance, const DesignParams& params,
                                          const CompactOptions& options = {});

inline constexpr int kEnumerationLimit = 20;

struct EnumeratedPoint {
  Protection protection;
  SubproblemStatus status = SubproblemStatus::Infeasible;
  double value = 0.0;
};

struct EnumerateOptions {
  int threads = 0;  ///< 0 = hardware concurrency
  SubproblemOptions subproblem;
};

/// Every coverage- and conflict-feasible protection vector with its Theta.
[[nodiscard]] std::vector<EnumeratedPoint> enumerate_points(const Instance& instance,
                                                            const DesignParams& params,
                                                            const EnumerateOptions& options = {});

struct EnumerateResult {
  ServicePlan plan;
  SolveStatus status = SolveStatus::Infeasible;
  int evaluated = 0;
};

/// Exhaustive oracle; throws PreconditionError above kEnumerationLimit demands.
[[nodiscard]] EnumerateResult enumerate_solve(const Instance& instance, const DesignParams& params,
                                              const EnumerateOptions& options = {});

/// Plan from a subproblem optimum.
[[nodiscard]] ServicePlan make_plan(const Instance& instance, const Protection& s,
                                    const SubproblemSolution& solution, std::string method);

}  // namespace regime_design
