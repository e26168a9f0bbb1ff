#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qtf/linear_op.hpp"
#include "qtf/linear_solve.hpp"
#include "qtf/prox.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// ADMM settings shared by all solvers.
struct SolverConfig {
  double rho = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  std::size_t max_iters = 20000;
  bool adaptive_rho = true;

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("SolverConfig: rho must be > 0");
    if (!(eps_abs > 0.0)) throw std::invalid_argument("SolverConfig: eps_abs must be > 0");
    if (!(eps_rel > 0.0)) throw std::invalid_argument("SolverConfig: eps_rel must be > 0");
    if (max_iters == 0) throw std::invalid_argument("SolverConfig: max_iters must be > 0");
  }
};

/// Outcome of one solve. `converged` means both residuals met the mixed
/// absolute/relative thresholds before the iteration cap.
struct SolveResult {
  Signal theta_hat;
  double objective = 0.0;
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

/// Reusable ADMM state for minimize sum_i rho_tau(y_i - theta_i) +
/// lambda_eff * |A theta|_1. Splits u = y - theta (check-loss block) and
/// w = A theta (l1 block); the theta update solves (I + A^T A) theta = rhs,
/// factorized once per path. Consecutive solve() calls warm start from the
/// previous solution, which makes penalty sweeps cheap.
class AdmmPath {
 public:
  AdmmPath(const Signal& y, QuantileLevel tau, const LinearOp& a, SolverConfig cfg)
      : y_(y.values()),
        tau_(tau),
        a_(a),
        cfg_(cfg),
        solver_(a, 1.0, 1.0),
        n_(y.size()),
        m_(a.rows()) {
    cfg.validate();
    if (a.cols() != n_) throw std::invalid_argument("admm: operator/signal size mismatch");
    y_norm_ = 0.0;
    for (double v : y_) y_norm_ += v * v;
    y_norm_ = std::sqrt(y_norm_);
    reset();
  }

  /// Drop warm state; the next solve starts from theta = y.
  void reset() {
    theta_ = y_;
    u_.assign(n_, 0.0);
    a_.apply(theta_, w_);
    p_.assign(n_, 0.0);
    q_.assign(m_, 0.0);
    rho_ = cfg_.rho;
    adaptations_ = 0;
  }

  /// Start the next solve from the given point instead of the warm state.
  void restart_from(const std::vector<double>& theta0) {
    if (theta0.size() != n_) throw std::invalid_argument("admm: warm start size mismatch");
    theta_ = theta0;
    for (std::size_t i = 0; i < n_; ++i) u_[i] = y_[i] - theta_[i];
    a_.apply(theta_, w_);
    p_.assign(n_, 0.0);
    q_.assign(m_, 0.0);
    rho_ = cfg_.rho;
    adaptations_ = 0;
  }

  SolveResult solve(double lambda_eff) {
    if (lambda_eff < 0.0) throw std::invalid_argument("admm: lambda_eff must be >= 0");
    if (lambda_eff == 0.0) {
      // Penalty off: interpolating the data is the unique optimum.
      theta_ = y_;
      u_.assign(n_, 0.0);
      a_.apply(theta_, w_);
      return SolveResult{Signal(theta_), 0.0, 0, 0.0, 0.0, true};
    }

    const double sqrt_dim_pri = std::sqrt(static_cast<double>(n_ + m_));
    const double sqrt_dim_dual = std::sqrt(static_cast<double>(n_));

    adaptations_ = 0;  // fresh balancing budget per solve
    double prim = 0.0, dual = 0.0;
    bool converged = false;
    std::size_t it = 0;
    for (; it < cfg_.max_iters; ++it) {
      // theta update
      tmp_m_.resize(m_);
      for (std::size_t j = 0; j < m_; ++j) tmp_m_[j] = w_[j] - q_[j];
      a_.apply_adjoint(tmp_m_, rhs_);
      for (std::size_t i = 0; i < n_; ++i) rhs_[i] += y_[i] - u_[i] + p_[i];
      solver_.solve(rhs_, theta_);
      a_.apply(theta_, a_theta_);

      // u and w updates, dual ascent, primal residual
      const double gamma = 1.0 / rho_;
      const double kappa = lambda_eff / rho_;
      double prim_sq = 0.0;
      du_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        const double u_new = prox_check(y_[i] - theta_[i] + p_[i], tau_, gamma);
        du_[i] = u_new - u_[i];
        u_[i] = u_new;
        const double r = y_[i] - theta_[i] - u_new;
        p_[i] += r;
        prim_sq += r * r;
      }
      dw_.resize(m_);
      for (std::size_t j = 0; j < m_; ++j) {
        const double w_new = soft_threshold(a_theta_[j] + q_[j], kappa);
        dw_[j] = w_new - w_[j];
        w_[j] = w_new;
        const double r = a_theta_[j] - w_new;
        q_[j] += r;
        prim_sq += r * r;
      }

      // dual residual rho*(du - A^T dw)
      a_.apply_adjoint(dw_, tmp_n_);
      double dual_sq = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double s = rho_ * (du_[i] - tmp_n_[i]);
        dual_sq += s * s;
      }

      prim = std::sqrt(prim_sq);
      dual = std::sqrt(dual_sq);

      // mixed absolute/relative thresholds
      double atheta_sq = 0.0, w_sq = 0.0;
      for (std::size_t j = 0; j < m_; ++j) {
        atheta_sq += a_theta_[j] * a_theta_[j];
        w_sq += w_[j] * w_[j];
      }
      const double eps_pri =
          sqrt_dim_pri * cfg_.eps_abs +
          cfg_.eps_rel * std::max(std::sqrt(atheta_sq), std::sqrt(w_sq));
      a_.apply_adjoint(q_, tmp_n_);
      double dual_ref = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double g = rho_ * (p_[i] - tmp_n_[i]);
        dual_ref += g * g;
      }
      const double eps_dual =
          sqrt_dim_dual * cfg_.eps_abs + cfg_.eps_rel * std::sqrt(dual_ref);

      if (prim <= eps_pri && dual <= eps_dual) {
        converged = true;
        ++it;
        break;
      }

      // residual balancing; duals are scaled, so they rescale with rho
      if (cfg_.adaptive_rho && adaptations_ < 30) {
        if (prim > 10.0 * dual) {
          rho_ *= 2.0;
          for (double& v : p_) v *= 0.5;
          for (double& v : q_) v *= 0.5;
          ++adaptations_;
        } else if (dual > 10.0 * prim) {
          rho_ *= 0.5;
          for (double& v : p_) v *= 2.0;
          for (double& v : q_) v *= 2.0;
          ++adaptations_;
        }
      }
    }

    double obj = detail::check_objective_raw(y_, theta_, tau_.value());
    obj += lambda_eff * a_.image_l1_norm(theta_);
    return SolveResult{Signal(theta_), obj, it, prim, dual, converged};
  }

  const std::vector<double>& current_theta() const { return theta_; }
  const LinearOp& op() const { return a_; }

 private:
  std::vector<double> y_;
  QuantileLevel tau_;
  LinearOp a_;
  SolverConfig cfg_;
  detail::NormalSolver solver_;
  std::size_t n_, m_;
  double y_norm_ = 0.0;

  // iterate state
  std::vector<double> theta_, u_, w_, p_, q_;
  double rho_ = 1.0;
  int adaptations_ = 0;

  // scratch
  std::vector<double> rhs_, a_theta_, tmp_m_, tmp_n_, du_, dw_;
};

/// One-shot solve of the generic split problem.
inline SolveResult admm_solve(const Signal& y, QuantileLevel tau, const LinearOp& a,
                              double lambda_eff, const SolverConfig& cfg) {
  AdmmPath path(y, tau, a, cfg);
  return path.solve(lambda_eff);
}

/// One-shot solve with a caller-provided initial theta.
inline SolveResult admm_solve(const Signal& y, QuantileLevel tau, const LinearOp& a,
                              double lambda_eff, const SolverConfig& cfg,
                              const Signal& theta0) {
  AdmmPath path(y, tau, a, cfg);
  path.restart_from(theta0.values());
  return path.solve(lambda_eff);
}

namespace detail {

struct BudgetBisection {
  std::optional<SolveResult> best;  // best feasible iterate by check objective
  double image_l1 = 0.0;            // |A theta|_1 of the returned iterate
  double lambda = 0.0;              // user-facing penalty of the returned iterate
  std::size_t bisections = 0;
  bool found_feasible = false;
};

// Solve min check objective subject to |A theta|_1 <= budget by bisecting
// the user-facing penalty lambda over log10 lambda in [-6, 10]. The
// effective l1 weight passed to the path is lambda * lambda_eff_factor.
// Exits once |A theta|_1 lands in [budget*(1-1e-6), budget] or the
// bisection budget of 60 midpoints is exhausted; among all iterates the
// best budget-feasible one by objective wins. Feasibility carries a
// machine-scale absolute slack on top of the relative one.
inline BudgetBisection budget_bisection(const Signal& y, QuantileLevel tau,
                                        const LinearOp& a, double budget,
                                        double lambda_eff_factor,
                                        const SolverConfig& cfg) {
  AdmmPath path(y, tau, a, cfg);
  double y_inf = 0.0;
  for (double v : y) y_inf = std::max(y_inf, std::abs(v));
  const double abs_slack =
      1e-12 * (1.0 + y_inf) * static_cast<double>(std::max<std::size_t>(a.rows(), 1));
  const double feas_cap = budget * (1.0 + 1e-6) + abs_slack;

  BudgetBisection out;
  double best_obj = 0.0;

  const auto consider = [&](SolveResult&& res, double lambda) {
    const double l1 = a.image_l1_norm(res.theta_hat.values());
    const double obj =
        detail::check_objective_raw(y.values(), res.theta_hat.values(), tau.value());
    const bool feasible = l1 <= feas_cap;
    if (feasible && (!out.found_feasible || obj < best_obj)) {
      out.found_feasible = true;
      best_obj = obj;
      res.objective = obj;  // budget form reports the check objective
      out.best = std::move(res);
      out.image_l1 = l1;
      out.lambda = lambda;
    } else if (!out.found_feasible &&
               (!out.best.has_value() || l1 < out.image_l1)) {
      // keep the least-infeasible iterate as a reported fallback
      res.objective = obj;
      out.best = std::move(res);
      out.image_l1 = l1;
      out.lambda = lambda;
    }
    return l1;
  };

  double lo = -6.0, hi = 10.0;
  double l1_lo = consider(path.solve(std::pow(10.0, lo) * lambda_eff_factor),
                          std::pow(10.0, lo));
  if (l1_lo <= feas_cap) return out;  // even a vanishing penalty is feasible
  double l1_hi = consider(path.solve(std::pow(10.0, hi) * lambda_eff_factor),
                          std::pow(10.0, hi));
  (void)l1_hi;

  for (std::size_t k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double l1 = consider(path.solve(std::pow(10.0, mid) * lambda_eff_factor),
                               std::pow(10.0, mid));
    ++out.bisections;
    if (l1 >= budget * (1.0 - 1e-6) && l1 <= feas_cap) break;
    if (l1 > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return out;
}

}  // namespace detail

}  // namespace qtf
