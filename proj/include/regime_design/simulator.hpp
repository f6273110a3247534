#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "regime_design/model.hpp"

namespace regime_design {

/// One end-to-end response: regime r ~ pi, then t_a + Exp(mu_r - Lambda_r).
/// Throws UnstableRegimeError.
[[nodiscard]] double sample_response(const Demand& demand, std::span<const Regime> regimes,
                                     const Eigen::VectorXd& mu, std::mt19937_64& rng);

struct SimulationOptions {
  /// Replace direct mixture draws by per-regime FCFS queues (Lindley recursion).
  bool discrete_event = false;
  int warmup = 10000;
  int threads = 1;
  /// Points of the default grid, spread from t_a to the analytic 0.999 quantile.
  int grid_points = 50;
};

struct DemandStatistics {
  std::string id;
  std::vector<double> grid;
  std::vector<double> empirical_cdf;
  std::vector<double> analytic_cdf;
  double empirical_mean = 0.0;
  double analytic_mean = 0.0;
  double analytic_sd = 0.0;
  double sla_hit_rate = 0.0;  ///< share of samples with R <= t*
  double analytic_sla = 0.0;
  double max_cdf_gap = 0.0;
};

struct SimulationResult {
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<DemandStatistics> demands;  ///< instance order
  double max_cdf_gap = 0.0;
};

/// Deterministic in (seed, demand id): each demand draws from its own substream.
/// An empty grid selects a per-demand default grid.
[[nodiscard]] SimulationResult simulate(const Instance& instance, const ServicePlan& plan,
                                        std::int64_t samples, std::uint64_t seed,
                                        const std::vector<double>& grid = {},
                                        const SimulationOptions& options = {});

/// Columns: demand_id, grid_t, empirical_cdf, analytic_cdf.
void write_simulation_csv(const SimulationResult& result, std::ostream& out);

struct Discrepancy {
  std::string check;       ///< "stability", "sla", "cvar"
  std::string identifier;
  double observed = 0.0;
  double bound = 0.0;
};

struct VerificationReport {
  bool passed = false;
  std::vector<Discrepancy> discrepancies;
  SimulationResult simulation;
};

/// Empirical SLA hit rates of protected demands against 1 - alpha - tolerance and
/// the CVaR of analytic expectations against Gamma.
[[nodiscard]] VerificationReport verify_plan(const Instance& instance, const DesignParams& params,
                                             const ServicePlan& plan, std::int64_t samples,
                                             std::uint64_t seed, double tolerance = 0.005);

/// splitmix64 finaliser; also used to derive substream seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t value);

}  // namespace regime_design
