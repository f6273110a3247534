#pragma once

// Shared smooth constraint and objective builders over reduced rates x_r = mu_r - Lambda_r.

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "regime_design/ipm.hpp"

namespace regime_design::detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::vector<int> iota_support(int first, int count) {
  std::vector<int> s(count);
  for (int k = 0; k < count; ++k) s[k] = first + k;
  return s;
}

/// a' x_support + b <= 0.
inline LocalConstraint linear_constraint(std::vector<int> support, Eigen::VectorXd coef, double b) {
  LocalConstraint c;
  c.support = std::move(support);
  c.eval = [coef = std::move(coef), b](const Eigen::VectorXd& x, double& v, Eigen::VectorXd& g,
                                       Eigen::MatrixXd&) {
    v = coef.dot(x) + b;
    g = coef;
  };
  return c;
}

/// log sum_r pi_r exp(-delta x_r) - log alpha <= 0 over x = (x_0..x_{R-1}).
inline LocalConstraint service_level_constraint(std::vector<int> support, Eigen::VectorXd weights,
                                                double delta, double alpha) {
  LocalConstraint c;
  c.support = std::move(support);
  c.eval = [w = std::move(weights), delta, alpha](const Eigen::VectorXd& x, double& v,
                                                  Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    const int R = static_cast<int>(x.size());
    double top = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < R; ++r)
      if (w[r] > 0) top = std::max(top, std::log(w[r]) - delta * x[r]);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(R);
    for (int r = 0; r < R; ++r)
      if (w[r] > 0) p[r] = std::exp(std::log(w[r]) - delta * x[r] - top);
    const double total = p.sum();
    p /= total;
    v = top + std::log(total) - std::log(alpha);
    g = -delta * p;
    h = delta * delta * (Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose());
  };
  return c;
}

/// sum_r pi_r / x_r - budget <= 0.
inline LocalConstraint tail_budget_constraint(std::vector<int> support, Eigen::VectorXd weights,
                                              double budget) {
  LocalConstraint c;
  c.support = std::move(support);
  c.eval = [w = std::move(weights), budget](const Eigen::VectorXd& x, double& v,
                                            Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    if ((x.array() <= 0).any()) {
      v = kNaN;
      return;
    }
    v = (w.array() / x.array()).sum() - budget;
    g = -(w.array() / x.array().square()).matrix();
    h = (2.0 * w.array() / x.array().cube()).matrix().asDiagonal();
  };
  return c;
}

/// Perspective service-level row over (x_0..x_{R-1}, s):
/// s sum_r pi_r exp(-delta x_r / s) + (1 - alpha) s - 1 <= 0.
inline LocalConstraint perspective_service_level(std::vector<int> support, Eigen::VectorXd weights,
                                                 double delta, double alpha) {
  LocalConstraint c;
  c.support = std::move(support);
  c.eval = [w = std::move(weights), delta, alpha](const Eigen::VectorXd& z, double& v,
                                                  Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    const int R = static_cast<int>(z.size()) - 1;
    const double s = z[R];
    if (!(s > 0)) {
      v = kNaN;
      return;
    }
    v = (1.0 - alpha) * s - 1.0;
    g[R] = 1.0 - alpha;
    for (int r = 0; r < R; ++r) {
      if (w[r] <= 0) continue;
      const double ratio = delta * z[r] / s;
      const double e = std::exp(-ratio);
      v += s * w[r] * e;
      g[r] = -delta * w[r] * e;
      g[R] += w[r] * e * (1.0 + ratio);
      h(r, r) = delta * delta * w[r] * e / s;
      h(r, R) = h(R, r) = -delta * w[r] * e * ratio / s;
      h(R, R) += w[r] * e * ratio * ratio / s;
    }
  };
  return c;
}

/// c'(Lambda + x) - kappa sum log x over the first R coordinates.
inline std::function<void(const Eigen::VectorXd&, double&, Eigen::VectorXd&, Eigen::MatrixXd&)>
rate_objective(Eigen::VectorXd costs, Eigen::VectorXd arrival, double kappa) {
  return [c = std::move(costs), lam = std::move(arrival), kappa](
             const Eigen::VectorXd& z, double& v, Eigen::VectorXd& g, Eigen::MatrixXd& h) {
    const int R = static_cast<int>(c.size());
    const auto x = z.head(R);
    if ((x.array() <= 0).any()) {
      v = kNaN;
      return;
    }
    v = c.dot(lam + x);
    g.head(R) = c;
    if (kappa > 0) {
      v -= kappa * x.array().log().sum();
      g.head(R).array() -= kappa / x.array();
      for (int r = 0; r < R; ++r) h(r, r) = kappa / (x[r] * x[r]);
    }
  };
}

}  // namespace regime_design::detail
