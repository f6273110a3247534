#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "regime_design/errors.hpp"
#include "regime_design/model.hpp"

namespace regime_design {

/// Shifted hyperexponential law of the end-to-end response time of one demand:
/// R = shift + Exp(rates[r]) with probability weights[r].
template <typename Scalar>
struct ResponseMixture {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar shift = Scalar(0);
  Vector weights;
  Vector rates;  ///< mu_r - Lambda_r, all positive

  /// P(R > t).
  [[nodiscard]] Scalar tail(Scalar t) const {
    using std::exp;
    if (t <= shift) return Scalar(1);
    const Scalar dt = t - shift;
    Scalar acc(0);
    for (Eigen::Index r = 0; r < weights.size(); ++r) acc += weights[r] * exp(-rates[r] * dt);
    return acc;
  }

  /// P(R <= t); exactly 0 up to and including the shift point.
  [[nodiscard]] Scalar cdf(Scalar t) const {
    if (t <= shift) return Scalar(0);
    Scalar p = Scalar(1) - tail(t);
    return std::clamp(p, Scalar(0), Scalar(1));
  }

  [[nodiscard]] Scalar density(Scalar t) const {
    using std::exp;
    if (t < shift) return Scalar(0);
    const Scalar dt = t - shift;
    Scalar acc(0);
    for (Eigen::Index r = 0; r < weights.size(); ++r)
      acc += weights[r] * rates[r] * exp(-rates[r] * dt);
    return acc;
  }

  [[nodiscard]] Scalar mean() const { return shift + (weights.array() / rates.array()).sum(); }

  [[nodiscard]] Scalar variance() const {
    const Scalar m1 = (weights.array() / rates.array()).sum();
    const Scalar m2 = (Scalar(2) * weights.array() / rates.array().square()).sum();
    return m2 - m1 * m1;
  }
};

/// Throws UnstableRegimeError for the first regime with mu_r <= Lambda_r.
template <typename Derived>
void require_stable(const Eigen::MatrixBase<Derived>& service_rates,
                    const Eigen::VectorXd& arrival_rates) {
  if (service_rates.size() != arrival_rates.size())
    throw DimensionMismatch("service-rate vector has " + std::to_string(service_rates.size()) +
                            " entries, expected " + std::to_string(arrival_rates.size()));
  for (Eigen::Index r = 0; r < arrival_rates.size(); ++r) {
    const double mu = static_cast<double>(service_rates[r]);
    if (!(mu > arrival_rates[r]) || !std::isfinite(mu))
      throw UnstableRegimeError(static_cast<int>(r), mu, arrival_rates[r]);
  }
}

[[nodiscard]] inline Eigen::VectorXd regime_arrivals(std::span<const Regime> regimes) {
  Eigen::VectorXd v(regimes.size());
  for (std::size_t r = 0; r < regimes.size(); ++r) v[r] = regimes[r].arrival_rate;
  return v;
}

[[nodiscard]] inline Eigen::VectorXd regime_weights(std::span<const Regime> regimes) {
  Eigen::VectorXd v(regimes.size());
  for (std::size_t r = 0; r < regimes.size(); ++r) v[r] = regimes[r].mixture_weight;
  return v;
}

template <typename Derived>
[[nodiscard]] ResponseMixture<double> response_mixture(const Demand& demand,
                                                       std::span<const Regime> regimes,
                                                       const Eigen::MatrixBase<Derived>& mu) {
  const Eigen::VectorXd lambda = regime_arrivals(regimes);
  require_stable(mu, lambda);
  ResponseMixture<double> m;
  m.shift = demand.access_time;
  m.weights = regime_weights(regimes);
  m.rates = mu.template cast<double>() - lambda;
  return m;
}

template <typename Derived>
[[nodiscard]] double response_cdf(const Demand& demand, std::span<const Regime> regimes,
                                  const Eigen::MatrixBase<Derived>& mu, double t) {
  return response_mixture(demand, regimes, mu).cdf(t);
}

template <typename Derived>
[[nodiscard]] double expected_response(const Demand& demand, std::span<const Regime> regimes,
                                       const Eigen::MatrixBase<Derived>& mu) {
  return response_mixture(demand, regimes, mu).mean();
}

/// sum_r pi_r exp(-(mu_r - Lambda_r) Delta_a); the SLA holds iff this is <= alpha_a.
template <typename Derived>
[[nodiscard]] double sla_lhs(const Demand& demand, std::span<const Regime> regimes,
                             const Eigen::MatrixBase<Derived>& mu) {
  if (demand.slack() < 0) throw DomainError("demand " + demand.id + " has negative slack");
  return response_mixture(demand, regimes, mu).tail(demand.threshold);
}

/// Smallest single-regime rate meeting the service level (or Lambda + eps when switched off).
[[nodiscard]] double single_regime_min_rate(double arrival_rate, double tolerance, double slack,
                                            double stability_margin, bool protect);

/// Mean of the floor((1 - gamma) n) largest values.
[[nodiscard]] double cvar_of_values(std::span<const double> values, double tail_fraction);

[[nodiscard]] inline double cvar_of_values(const Eigen::VectorXd& values, double tail_fraction) {
  return cvar_of_values(std::span<const double>(values.data(), values.size()), tail_fraction);
}

}  // namespace regime_design
