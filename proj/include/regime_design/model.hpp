#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace regime_design {

/// Events per minute unless stated otherwise; all times are minutes.
inline constexpr double kDefaultStabilityMargin = 1e-4;
/// Stand-in for an unbounded tail threshold; the CVaR block stays in the model.
inline constexpr double kUnboundedTail = 1e9;

struct Regime {
  int index = 0;
  std::string name;
  double arrival_rate = 0.0;
  double mixture_weight = 0.0;
  double unit_cost = 1.0;
};

struct Demand {
  std::string id;
  double access_time = 0.0;
  double threshold = 0.0;
  double tolerance = 0.05;
  double weight = 1.0;

  [[nodiscard]] double slack() const noexcept { return threshold - access_time; }
  /// alpha == 1 makes the service-level row vacuous.
  [[nodiscard]] bool sla_trivial() const noexcept { return tolerance >= 1.0; }
};

/// Unordered pair of demand indices, stored with first < second.
struct ConflictEdge {
  int first = 0;
  int second = 0;
  friend bool operator==(const ConflictEdge&, const ConflictEdge&) = default;
  friend auto operator<=>(const ConflictEdge&, const ConflictEdge&) = default;
};

struct ValidationOptions {
  /// Tolerance on sum(pi) == 1 and pi_r == Lambda_r / sum(Lambda). Table-transcribed
  /// weights are rounded to four decimals and need about 1e-3.
  double mixture_tolerance = 1e-9;
};

/// Immutable problem data. Construction validates every invariant and throws
/// DomainError on the first violation.
class Instance {
 public:
  Instance(std::vector<Demand> demands, std::vector<Regime> regimes,
           const std::vector<std::pair<std::string, std::string>>& conflicts,
           double stability_margin = kDefaultStabilityMargin, ValidationOptions options = {});

  Instance(std::vector<Demand> demands, std::vector<Regime> regimes,
           std::vector<ConflictEdge> conflicts, double stability_margin = kDefaultStabilityMargin,
           ValidationOptions options = {});

  [[nodiscard]] int num_demands() const noexcept { return static_cast<int>(demands_.size()); }
  [[nodiscard]] int num_regimes() const noexcept { return static_cast<int>(regimes_.size()); }

  [[nodiscard]] const std::vector<Demand>& demands() const noexcept { return demands_; }
  [[nodiscard]] const std::vector<Regime>& regimes() const noexcept { return regimes_; }
  [[nodiscard]] const Demand& demand(int a) const { return demands_.at(a); }
  [[nodiscard]] const Regime& regime(int r) const { return regimes_.at(r); }
  [[nodiscard]] const std::vector<ConflictEdge>& conflict_edges() const noexcept { return edges_; }
  [[nodiscard]] const std::vector<std::vector<int>>& neighbours() const noexcept { return adjacency_; }
  [[nodiscard]] double stability_margin() const noexcept { return epsilon_; }
  [[nodiscard]] const ValidationOptions& validation_options() const noexcept { return options_; }

  [[nodiscard]] const Eigen::VectorXd& arrival_rates() const noexcept { return arrival_; }
  [[nodiscard]] const Eigen::VectorXd& mixture_weights() const noexcept { return weights_; }
  [[nodiscard]] const Eigen::VectorXd& unit_costs() const noexcept { return costs_; }
  [[nodiscard]] const Eigen::VectorXd& access_times() const noexcept { return access_; }
  /// Delta_a = t*_a - t_a.
  [[nodiscard]] const Eigen::VectorXd& slacks() const noexcept { return slack_; }

  [[nodiscard]] std::optional<int> index_of(const std::string& id) const;
  [[nodiscard]] bool conflict_free() const noexcept { return edges_.empty(); }
  [[nodiscard]] bool uniform_tolerance() const noexcept;

  /// Data-estimated status-quo rates (mu-hat), when the instance came from ingestion.
  [[nodiscard]] const std::optional<Eigen::VectorXd>& baseline_rates() const noexcept {
    return baseline_;
  }
  [[nodiscard]] Instance with_baseline_rates(Eigen::VectorXd rates) const;

 private:
  void validate(const ValidationOptions& options);

  std::vector<Demand> demands_;
  std::vector<Regime> regimes_;
  std::vector<ConflictEdge> edges_;
  std::vector<std::vector<int>> adjacency_;
  double epsilon_;
  ValidationOptions options_;
  Eigen::VectorXd arrival_, weights_, costs_, access_, slack_;
  std::unordered_map<std::string, int> index_;
  std::optional<Eigen::VectorXd> baseline_;
};

struct DesignParams {
  double coverage = 1.0;         ///< beta in (0, 1]
  double tail_fraction = 0.0;    ///< gamma in [0, 1)
  double tail_threshold = kUnboundedTail;  ///< Gamma, minutes
  double congestion_weight = 0.0;          ///< kappa >= 0
  bool weighted_coverage = false;

  /// Throws DomainError / DegenerateFraction when the knobs do not fit an n-demand instance.
  void validate(int num_demands) const;
};

/// ceil(beta * n); tolerant to representation error in beta * n.
[[nodiscard]] int required_protected(double coverage, int num_demands);
/// floor((1 - gamma) * n); tolerant to representation error.
[[nodiscard]] int tail_count(double tail_fraction, int num_demands);

using Protection = std::vector<bool>;

[[nodiscard]] int count_protected(const Protection& s);
[[nodiscard]] bool coverage_satisfied(const Instance& instance, const DesignParams& params,
                                      const Protection& s);
[[nodiscard]] bool conflicts_satisfied(const Instance& instance, const Protection& s);

struct ServicePlan {
  Eigen::VectorXd service_rates;
  Protection protected_demands;
  double objective_value = 0.0;
  bool feasible = false;
  std::string method;
};

enum class ViolationKind { Stability, ServiceLevel, Coverage, Conflict, TailRisk };

[[nodiscard]] const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string identifier;  ///< regime name, demand id, "coverage", "a|b", "cvar"
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  ///< signed; negative means violated
};

struct PerformanceReport {
  Eigen::VectorXd expectations;  ///< E[R_a]
  Eigen::VectorXd sla_probabilities;  ///< P(R_a <= t*_a)
  double cvar = 0.0;
  Eigen::VectorXd utilizations;
  double capacity_cost = 0.0;
  double congestion_penalty = 0.0;
  double objective = 0.0;
  std::vector<Violation> violations;
};

}  // namespace regime_design
