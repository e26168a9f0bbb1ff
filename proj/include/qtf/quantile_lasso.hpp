#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qtf/admm.hpp"
#include "qtf/linear_solve.hpp"
#include "qtf/prox.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// Fixed design matrix, row-major, with cached column norms.
class DesignMatrix {
 public:
  DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
      : n_(rows), p_(cols), a_(std::move(row_major)) {
    if (n_ < 1 || p_ < 1) throw std::invalid_argument("design: needs n >= 1, p >= 1");
    if (a_.size() != n_ * p_) throw std::invalid_argument("design: size mismatch");
    for (double v : a_) {
      if (!std::isfinite(v)) throw std::invalid_argument("design: entries must be finite");
    }
    col_norms_.assign(p_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < p_; ++j) {
        col_norms_[j] += a_[i * p_ + j] * a_[i * p_ + j];
      }
    }
    for (double& c : col_norms_) c = std::sqrt(c);
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return p_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * p_ + j]; }
  const std::vector<double>& data() const { return a_; }
  double column_norm(std::size_t j) const { return col_norms_[j]; }

  void multiply(const std::vector<double>& beta, std::vector<double>& out) const {
    out.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < p_; ++j) s += a_[i * p_ + j] * beta[j];
      out[i] = s;
    }
  }

  void multiply_transpose(const std::vector<double>& v, std::vector<double>& out) const {
    out.assign(p_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double vi = v[i];
      for (std::size_t j = 0; j < p_; ++j) out[j] += a_[i * p_ + j] * vi;
    }
  }

 private:
  std::size_t n_, p_;
  std::vector<double> a_;
  std::vector<double> col_norms_;
};

/// l1-budgeted quantile linear regression: minimize the check objective of
/// y - X beta subject to |beta|_1 <= V.
struct L1QrProblem {
  DesignMatrix X;
  Signal y;
  QuantileLevel tau;
  double budget_v = 0.0;

  void validate() const {
    if (y.size() != X.rows()) throw std::invalid_argument("l1qr: X/y size mismatch");
    if (budget_v < 0.0) throw std::invalid_argument("l1qr: budget must be >= 0");
    if (X.cols() > 2000) throw std::invalid_argument("l1qr: p must be <= 2000");
  }
};

struct L1QrResult {
  std::vector<double> beta_hat;  // exactly feasible: |beta|_1 <= V
  SolveResult result;            // theta_hat = X beta_hat, check objective
};

/// ADMM with splits u = y - X beta (check-loss block) and b = beta
/// (l1-ball block); the coupling solve factors I + X^T X once. The
/// returned coefficients are the projected block, so the budget holds
/// exactly.
inline L1QrResult l1_qr_fit(const L1QrProblem& prob, const SolverConfig& cfg) {
  prob.validate();
  cfg.validate();
  const std::size_t n = prob.X.rows();
  const std::size_t p = prob.X.cols();
  const std::vector<double>& y = prob.y.values();

  if (prob.budget_v == 0.0) {
    std::vector<double> beta(p, 0.0);
    Signal theta = Signal::zeros(n);
    const double obj = check_objective(prob.y, theta, prob.tau);
    return L1QrResult{std::move(beta), SolveResult{std::move(theta), obj, 0, 0.0, 0.0, true}};
  }

  // gram = I + X^T X, factored once
  std::vector<double> gram(p * p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double xij = prob.X(i, j);
      for (std::size_t k = 0; k <= j; ++k) {
        gram[j * p + k] += xij * prob.X(i, k);
      }
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    gram[j * p + j] += 1.0;
    for (std::size_t k = 0; k < j; ++k) gram[k * p + j] = gram[j * p + k];
  }
  const DenseCholesky chol(p, std::move(gram));

  std::vector<double> beta(p, 0.0), b(p, 0.0), u(y), q(p, 0.0), pd(n, 0.0);
  std::vector<double> xb(n, 0.0), rhs(p), du(n), db(p), tmp_p(p);
  // start from beta = 0, u = y
  double rho = cfg.rho;
  int adaptations = 0;
  double y_norm = 0.0;
  for (double v : y) y_norm += v * v;
  y_norm = std::sqrt(y_norm);
  const double sqrt_dim_pri = std::sqrt(static_cast<double>(n + p));
  const double sqrt_dim_dual = std::sqrt(static_cast<double>(p));

  double prim = 0.0, dual = 0.0;
  bool converged = false;
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    // beta update: (I + X^T X) beta = X^T(y - u + pd) + (b - q)
    du.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) du[i] = y[i] - u[i] + pd[i];
    prob.X.multiply_transpose(du, rhs);
    for (std::size_t j = 0; j < p; ++j) rhs[j] += b[j] - q[j];
    beta = rhs;
    chol.solve_in_place(beta);
    prob.X.multiply(beta, xb);

    const double gamma = 1.0 / rho;
    double prim_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u_new = prox_check(y[i] - xb[i] + pd[i], prob.tau, gamma);
      du[i] = u_new - u[i];
      u[i] = u_new;
      const double r = y[i] - xb[i] - u_new;
      pd[i] += r;
      prim_sq += r * r;
    }
    db = b;
    for (std::size_t j = 0; j < p; ++j) b[j] = beta[j] + q[j];
    l1_ball_project_in_place(b, prob.budget_v, tmp_p);
    for (std::size_t j = 0; j < p; ++j) {
      db[j] = b[j] - db[j];
      const double r = beta[j] - b[j];
      q[j] += r;
      prim_sq += r * r;
    }

    // dual residual rho*(X^T du - db)
    prob.X.multiply_transpose(du, tmp_p);
    double dual_sq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double s = rho * (tmp_p[j] - db[j]);
      dual_sq += s * s;
    }
    prim = std::sqrt(prim_sq);
    dual = std::sqrt(dual_sq);

    double mx = 0.0, nz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += xb[i] * xb[i];
      nz += u[i] * u[i];
    }
    for (std::size_t j = 0; j < p; ++j) {
      mx += beta[j] * beta[j];
      nz += b[j] * b[j];
    }
    const double eps_pri = sqrt_dim_pri * cfg.eps_abs +
                           cfg.eps_rel * std::max({std::sqrt(mx), std::sqrt(nz), y_norm});
    prob.X.multiply_transpose(pd, tmp_p);
    double dref = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double g = rho * (tmp_p[j] - q[j]);
      dref += g * g;
    }
    const double eps_dual = sqrt_dim_dual * cfg.eps_abs + cfg.eps_rel * std::sqrt(dref);
    if (prim <= eps_pri && dual <= eps_dual) {
      converged = true;
      ++it;
      break;
    }
    if (cfg.adaptive_rho && adaptations < 30) {
      if (prim > 10.0 * dual) {
        rho *= 2.0;
        for (double& v : pd) v *= 0.5;
        for (double& v : q) v *= 0.5;
        ++adaptations;
      } else if (dual > 10.0 * prim) {
        rho *= 0.5;
        for (double& v : pd) v *= 2.0;
        for (double& v : q) v *= 2.0;
        ++adaptations;
      }
    }
  }

  prob.X.multiply(b, xb);
  Signal theta_hat(xb);
  const double obj = check_objective(prob.y, theta_hat, prob.tau);
  return L1QrResult{b, SolveResult{std::move(theta_hat), obj, it, prim, dual, converged}};
}

}  // namespace qtf
