#include "regime_design/ipm.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace regime_design {

namespace {

struct Evaluation {
  double f0 = 0.0;
  Eigen::VectorXd g0;
  Eigen::MatrixXd h0;
  Eigen::VectorXd values;
  std::vector<Eigen::VectorXd> grads;
  std::vector<Eigen::MatrixXd> hessians;
  bool finite = true;
};

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& support) {
  Eigen::VectorXd local(support.size());
  for (std::size_t k = 0; k < support.size(); ++k) local[k] = x[support[k]];
  return local;
}

bool strictly_feasible(const Evaluation& e) {
  return e.finite && (e.values.size() == 0 || e.values.maxCoeff() < 0);
}

Evaluation evaluate(const SmoothProblem& p, const Eigen::VectorXd& x) {
  Evaluation e;
  const std::size_t m = p.constraints.size();
  e.g0 = Eigen::VectorXd::Zero(p.dimension);
  e.h0 = Eigen::MatrixXd::Zero(p.dimension, p.dimension);
  p.objective(x, e.f0, e.g0, e.h0);
  e.values.resize(m);
  e.grads.resize(m);
  e.hessians.resize(m);
  e.finite = std::isfinite(e.f0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = p.constraints[i];
    const int k = static_cast<int>(c.support.size());
    e.grads[i] = Eigen::VectorXd::Zero(k);
    e.hessians[i] = Eigen::MatrixXd::Zero(k, k);
    c.eval(gather(x, c.support), e.values[i], e.grads[i], e.hessians[i]);
    if (!std::isfinite(e.values[i])) e.finite = false;
  }
  return e;
}

/// Gradient of the Lagrangian f0 + sum lambda_i g_i.
Eigen::VectorXd dual_residual(const SmoothProblem& p, const Evaluation& e,
                              const Eigen::VectorXd& lambda) {
  Eigen::VectorXd r = e.g0;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& sup = p.constraints[i].support;
    for (std::size_t k = 0; k < sup.size(); ++k) r[sup[k]] += lambda[i] * e.grads[i][k];
  }
  return r;
}

double residual_norm(const SmoothProblem& p, const Evaluation& e, const Eigen::VectorXd& lambda,
                     double t) {
  const Eigen::VectorXd rd = dual_residual(p, e, lambda);
  const Eigen::VectorXd rc = -(lambda.array() * e.values.array()) - 1.0 / t;
  return std::sqrt(rd.squaredNorm() + rc.squaredNorm());
}


// Damped Newton on psi(x) = t f0(x) - sum log(-f_i(x)).
bool center(const SmoothProblem& p, double t, Eigen::VectorXd& x, Evaluation& cur,
            const IpmOptions& opt, double decrement_tol = 1e-9) {
  const int m = static_cast<int>(p.constraints.size());
  auto psi = [&](const Evaluation& e) {
    return t * e.f0 - (-e.values.array()).log().sum();
  };
  for (int it = 0; it < 100; ++it) {
    Eigen::MatrixXd H = t * cur.h0;
    Eigen::VectorXd grad = t * cur.g0;
    for (int i = 0; i < m; ++i) {
      const auto& sup = p.constraints[i].support;
      const double mf = -cur.values[i];
      const Eigen::VectorXd& g = cur.grads[i];
      const Eigen::MatrixXd local = cur.hessians[i] / mf + (g * g.transpose()) / (mf * mf);
      for (std::size_t a = 0; a < sup.size(); ++a) {
        grad[sup[a]] += g[a] / mf;
        for (std::size_t b = 0; b < sup.size(); ++b) H(sup[a], sup[b]) += local(a, b);
      }
    }
    H.diagonal().array() += 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd dx = -ldlt.solve(grad);
    const double decrement = -grad.dot(dx);
    if (!dx.allFinite()) return false;
    if (decrement <= decrement_tol) return true;
    const double base = psi(cur);
    double step = 1.0;
    while (step > 1e-14) {
      Evaluation next = evaluate(p, x + step * dx);
      if (strictly_feasible(next) && psi(next) <= base - opt.armijo * step * decrement) {
        x += step * dx;
        cur = std::move(next);
        break;
      }
      step *= opt.backtrack;
    }
    if (step <= 1e-14) return false;
  }
  return false;
}

}  // namespace

Eigen::VectorXd constraint_values(const SmoothProblem& problem, const Eigen::VectorXd& x) {
  Eigen::VectorXd v(problem.constraints.size());
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const auto& c = problem.constraints[i];
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.support.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(c.support.size(), c.support.size());
    c.eval(gather(x, c.support), v[i], g, h);
  }
  return v;
}

namespace {

IpmResult primal_dual(const SmoothProblem& problem, const Eigen::VectorXd& x0,
                      const IpmOptions& opt) {
  const int m = static_cast<int>(problem.constraints.size());
  IpmResult res;
  res.x = x0;

  Evaluation cur = evaluate(problem, x0);
  if (!strictly_feasible(cur)) {
    res.status = IpmStatus::NumericalFailure;
    return res;
  }
  Eigen::VectorXd x = x0;
  // Centre on t0 f0 - sum log(-f_i) first so the initial multipliers are consistent.
  const double t0 = m > 0 ? std::max(1e-8, m / (1.0 + std::abs(cur.f0))) : 1.0;
  if (m > 0) center(problem, t0, x, cur, opt);
  Eigen::VectorXd lambda = (t0 * -cur.values.array()).inverse().matrix();

  int stalled = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    const double gap = m > 0 ? -cur.values.dot(lambda) : 0.0;
    const Eigen::VectorXd rd = dual_residual(problem, cur, lambda);
    const double rd_norm = rd.lpNorm<Eigen::Infinity>();
    const double scale_f = 1.0 + std::abs(cur.f0);
    const double scale_g = 1.0 + cur.g0.lpNorm<Eigen::Infinity>();
    if (rd_norm <= opt.residual_tolerance * scale_g && gap <= opt.gap_tolerance * scale_f) {
      res.status = IpmStatus::Optimal;
      break;
    }
    const double t = m > 0 ? opt.barrier_growth * m / gap : 1.0 / (opt.gap_tolerance * scale_f);

    Eigen::MatrixXd H = cur.h0;
    Eigen::VectorXd rhs = -cur.g0;
    for (int i = 0; i < m; ++i) {
      const auto& sup = problem.constraints[i].support;
      const double mf = -cur.values[i];
      const Eigen::VectorXd& g = cur.grads[i];
      const Eigen::MatrixXd local =
          lambda[i] * cur.hessians[i] + (lambda[i] / mf) * (g * g.transpose());
      for (std::size_t a = 0; a < sup.size(); ++a) {
        rhs[sup[a]] -= g[a] / (t * mf);
        for (std::size_t b = 0; b < sup.size(); ++b) H(sup[a], sup[b]) += local(a, b);
      }
    }
    const double reg = 1e-14 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    H.diagonal().array() += reg;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd dx = ldlt.solve(rhs);
    if (!dx.allFinite()) break;

    Eigen::VectorXd dlambda(m);
    for (int i = 0; i < m; ++i) {
      const auto& sup = problem.constraints[i].support;
      double gdx = 0;
      for (std::size_t a = 0; a < sup.size(); ++a) gdx += cur.grads[i][a] * dx[sup[a]];
      const double mf = -cur.values[i];
      dlambda[i] = -lambda[i] + 1.0 / (t * mf) + lambda[i] * gdx / mf;
    }

    double step = 1.0;
    for (int i = 0; i < m; ++i)
      if (dlambda[i] < 0) step = std::min(step, -lambda[i] / dlambda[i]);
    step *= 0.99;

    const double r0 = residual_norm(problem, cur, lambda, t);
    Evaluation next;
    bool accepted = false;
    while (step > 1e-16) {
      next = evaluate(problem, x + step * dx);
      if (strictly_feasible(next)) {
        const Eigen::VectorXd lnext = lambda + step * dlambda;
        if (residual_norm(problem, next, lnext, t) <= (1.0 - opt.armijo * step) * r0) {
          accepted = true;
          break;
        }
      }
      step *= opt.backtrack;
    }
    if (!accepted) {
      // No progress possible; accept the current point if it is already tight.
      if (rd_norm <= 1e3 * opt.residual_tolerance * scale_g && gap <= 1e3 * opt.gap_tolerance * scale_f)
        res.status = IpmStatus::Optimal;
      break;
    }
    x += step * dx;
    lambda += step * dlambda;
    cur = std::move(next);
    res.iterations = it + 1;
    stalled = step < 1e-3 ? stalled + 1 : 0;
    if (stalled >= 20 || it + 1 == opt.max_iterations) {
      res.status = IpmStatus::IterationLimit;
      break;
    }
  }

  res.x = x;
  res.multipliers = lambda;
  res.constraint_values = cur.values;
  res.objective = cur.f0;
  res.surrogate_gap = m > 0 ? -cur.values.dot(lambda) : 0.0;
  res.dual_residual = dual_residual(problem, cur, lambda).lpNorm<Eigen::Infinity>();
  // Slow progress near the boundary: keep the point if it meets the loosened tolerances.
  if (res.status == IpmStatus::IterationLimit &&
      res.dual_residual <= 1e3 * opt.residual_tolerance * (1.0 + cur.g0.lpNorm<Eigen::Infinity>()) &&
      res.surrogate_gap <= 1e3 * opt.gap_tolerance * (1.0 + std::abs(cur.f0)))
    res.status = IpmStatus::Optimal;
  if (res.status != IpmStatus::Optimal && res.status != IpmStatus::IterationLimit)
    res.status = IpmStatus::NumericalFailure;
  return res;
}

// Path-following barrier method; slower than primal_dual but insensitive to thin feasible sets.
IpmResult barrier(const SmoothProblem& problem, const Eigen::VectorXd& x0, const IpmOptions& opt) {
  const int m = static_cast<int>(problem.constraints.size());
  IpmResult res;
  Eigen::VectorXd x = x0;
  Evaluation cur = evaluate(problem, x);
  if (!strictly_feasible(cur) || m == 0) return res;
  double t = std::max(1e-8, m / (1.0 + std::abs(cur.f0)));
  // Last centred iterate that meets the loosened tolerances.
  std::optional<std::pair<Eigen::VectorXd, double>> kept;
  int misses = 0;
  for (int outer = 0; outer < 60 && misses < 3; ++outer) {
    const bool centred = center(problem, t, x, cur, opt, 1e-12);
    ++res.iterations;
    const Eigen::VectorXd lambda = (t * -cur.values.array()).inverse().matrix();
    const double rd = dual_residual(problem, cur, lambda).lpNorm<Eigen::Infinity>();
    const double scale_f = 1.0 + std::abs(cur.f0);
    const double scale_g = 1.0 + cur.g0.lpNorm<Eigen::Infinity>();
    misses = centred ? 0 : misses + 1;
    if (centred && m / t <= 1e3 * opt.gap_tolerance * scale_f &&
        rd <= 1e3 * opt.residual_tolerance * scale_g)
      kept.emplace(x, t);
    if (centred && m / t <= opt.gap_tolerance * scale_f && rd <= opt.residual_tolerance * scale_g)
      break;
    t *= opt.barrier_growth;
  }
  if (!kept) return res;
  x = kept->first;
  t = kept->second;
  cur = evaluate(problem, x);
  const Eigen::VectorXd lambda = (t * -cur.values.array()).inverse().matrix();
  res.status = IpmStatus::Optimal;
  res.x = x;
  res.multipliers = lambda;
  res.constraint_values = cur.values;
  res.objective = cur.f0;
  res.surrogate_gap = -cur.values.dot(lambda);
  res.dual_residual = dual_residual(problem, cur, lambda).lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace

IpmResult solve_smooth(const SmoothProblem& problem, const Eigen::VectorXd& x0,
                       const IpmOptions& opt) {
  IpmResult res = primal_dual(problem, x0, opt);
  if (res.status == IpmStatus::Optimal) return res;
  IpmResult fallback = barrier(problem, x0, opt);
  if (fallback.status == IpmStatus::Optimal) {
    fallback.iterations += res.iterations;
    return fallback;
  }
  return res;
}

}  // namespace regime_design
