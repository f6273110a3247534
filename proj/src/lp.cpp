#include "regime_design/lp.hpp"

#include <cmath>
#include <limits>

#include "regime_design/errors.hpp"

namespace regime_design {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class State : unsigned char { Basic, Lower, Upper, Zero };

class Tableau {
 public:
  Tableau(const LpProblem& p, const LpOptions& opt) : opt_(opt) {
    n_ = static_cast<int>(p.cost.size());
    m_ = static_cast<int>(p.rhs.size());
    N_ = n_ + 2 * m_;
    lo_.resize(N_);
    up_.resize(N_);
    cost_ = Eigen::VectorXd::Zero(N_);
    cost_.head(n_) = p.cost;
    lo_.head(n_) = p.lower;
    up_.head(n_) = p.upper;
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      switch (p.types[i]) {
        case RowType::LessEqual: lo_[s] = 0; up_[s] = kInf; break;
        case RowType::GreaterEqual: lo_[s] = -kInf; up_[s] = 0; break;
        case RowType::Equal: lo_[s] = 0; up_[s] = 0; break;
      }
      lo_[n_ + m_ + i] = 0;
      up_[n_ + m_ + i] = kInf;
    }

    x_ = Eigen::VectorXd::Zero(N_);
    state_.assign(N_, State::Zero);
    for (int j = 0; j < n_ + m_; ++j) {
      if (std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
        state_[j] = State::Lower;
      } else if (std::isfinite(up_[j])) {
        x_[j] = up_[j];
        state_[j] = State::Upper;
      }
    }
    T_ = Eigen::MatrixXd::Zero(m_, N_);
    basis_.resize(m_);
    beta_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      double res = p.rhs[i] - p.A.row(i).dot(x_.head(n_));
      const double sigma = res >= 0 ? 1.0 : -1.0;
      T_.block(i, 0, 1, n_) = sigma * p.A.row(i);
      T_(i, n_ + i) = sigma;
      T_(i, n_ + m_ + i) = 1.0;
      const int art = n_ + m_ + i;
      basis_[i] = art;
      state_[art] = State::Basic;
      beta_[i] = sigma * res;
      x_[art] = beta_[i];
    }
  }

  LpStatus run(const Eigen::VectorXd& phase_cost, int& pivots) {
    Eigen::VectorXd c = phase_cost;
    d_ = c;
    for (int i = 0; i < m_; ++i) d_ -= c[basis_[i]] * T_.row(i).transpose();
    bool bland = false;
    int degenerate = 0;
    const double tol = opt_.tolerance;
    while (true) {
      if (pivots >= opt_.max_pivots) return LpStatus::IterationLimit;
      int enter = -1;
      double best = 0;
      int dir = 0;
      for (int j = 0; j < N_; ++j) {
        if (state_[j] == State::Basic || lo_[j] == up_[j]) continue;
        int candidate = 0;
        if ((state_[j] == State::Lower || state_[j] == State::Zero) && d_[j] < -tol) candidate = 1;
        else if ((state_[j] == State::Upper || state_[j] == State::Zero) && d_[j] > tol) candidate = -1;
        if (!candidate) continue;
        if (bland) {
          enter = j;
          dir = candidate;
          break;
        }
        if (std::abs(d_[j]) > best) {
          best = std::abs(d_[j]);
          enter = j;
          dir = candidate;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      double theta = kInf;
      int leave = -1;
      double pivot_mag = 0;
      const double range = up_[enter] - lo_[enter];
      for (int i = 0; i < m_; ++i) {
        const double delta = -dir * T_(i, enter);
        if (std::abs(delta) <= 1e-9) continue;
        const int b = basis_[i];
        double limit = kInf;
        if (delta < 0 && std::isfinite(lo_[b])) limit = std::max(0.0, (beta_[i] - lo_[b]) / -delta);
        if (delta > 0 && std::isfinite(up_[b])) limit = std::max(0.0, (up_[b] - beta_[i]) / delta);
        if (!std::isfinite(limit)) continue;
        const bool better = bland ? (limit < theta - 1e-12 ||
                                     (limit <= theta + 1e-12 && leave >= 0 && b < basis_[leave]))
                                  : (limit < theta - 1e-12 ||
                                     (limit <= theta + 1e-12 && std::abs(delta) > pivot_mag));
        if (leave < 0 ? limit < theta : better) {
          theta = limit;
          leave = i;
          pivot_mag = std::abs(delta);
        }
      }
      const bool flip = std::isfinite(range) && range <= theta;
      if (flip) theta = range;
      if (!std::isfinite(theta)) return LpStatus::Unbounded;

      for (int i = 0; i < m_; ++i) beta_[i] += -dir * T_(i, enter) * theta;
      x_[enter] += dir * theta;
      ++pivots;
      if (theta <= 1e-12) {
        if (++degenerate > opt_.degenerate_switch) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }

      if (flip) {
        state_[enter] = dir > 0 ? State::Upper : State::Lower;
        x_[enter] = dir > 0 ? up_[enter] : lo_[enter];
        continue;
      }
      const int out = basis_[leave];
      const double delta = -dir * T_(leave, enter);
      if (delta < 0) {
        state_[out] = State::Lower;
        x_[out] = lo_[out];
      } else {
        state_[out] = State::Upper;
        x_[out] = up_[out];
      }
      const double piv = T_(leave, enter);
      T_.row(leave) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        const double f = T_(i, enter);
        if (f != 0) T_.row(i) -= f * T_.row(leave);
      }
      const double dj = d_[enter];
      d_ -= dj * T_.row(leave).transpose();
      basis_[leave] = enter;
      state_[enter] = State::Basic;
      beta_[leave] = x_[enter];
    }
  }

  void sync() {
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = beta_[i];
  }

  double artificial_sum() {
    sync();
    return x_.tail(m_).sum();
  }

  void freeze_artificials() {
    for (int i = 0; i < m_; ++i) up_[n_ + m_ + i] = 0;
  }

  int n_, m_, N_;
  LpOptions opt_;
  Eigen::VectorXd lo_, up_, cost_, x_, beta_, d_;
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
  std::vector<State> state_;
};

}  // namespace

LpResult solve_lp(const LpProblem& p, const LpOptions& opt) {
  const int n = static_cast<int>(p.cost.size());
  const int m = static_cast<int>(p.rhs.size());
  if (p.lower.size() != n || p.upper.size() != n || p.A.rows() != m || p.A.cols() != n ||
      static_cast<int>(p.types.size()) != m)
    throw DimensionMismatch("inconsistent LP dimensions");
  LpResult res;
  for (int j = 0; j < n; ++j)
    if (p.lower[j] > p.upper[j]) return res;

  Tableau tab(p, opt);
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(tab.N_);
  phase1.tail(m).setOnes();
  LpStatus st = tab.run(phase1, res.pivots);
  if (st == LpStatus::IterationLimit) {
    res.status = st;
    return res;
  }
  double scale = 1.0;
  for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(p.rhs[i]));
  if (tab.artificial_sum() > 1e-7 * scale) {
    res.status = LpStatus::Infeasible;
    return res;
  }
  tab.freeze_artificials();
  st = tab.run(tab.cost_, res.pivots);
  tab.sync();
  res.status = st;
  res.x = tab.x_.head(n);
  for (int j = 0; j < n; ++j) res.x[j] = std::clamp(res.x[j], p.lower[j], p.upper[j]);
  res.objective = p.cost.dot(res.x);
  return res;
}

}  // namespace regime_design
