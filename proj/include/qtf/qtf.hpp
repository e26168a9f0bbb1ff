#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qtf/admm.hpp"
#include "qtf/linear_op.hpp"
#include "qtf/prox.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// Penalized quantile trend filtering: minimize the check objective plus
/// lambda times the r-th order total variation.
struct PqtfProblem {
  Signal y;
  QuantileLevel tau;
  DiffOrder r;
  double lambda = 0.0;

  void validate() const {
    if (y.size() <= r.value()) throw std::invalid_argument("pqtf: needs n > r");
    if (lambda < 0.0) throw std::invalid_argument("pqtf: lambda must be >= 0");
  }
};

/// Constrained form: minimize the check objective subject to a total
/// variation budget.
struct CqtfProblem {
  Signal y;
  QuantileLevel tau;
  DiffOrder r;
  double budget_v = 0.0;

  void validate() const {
    if (y.size() <= r.value()) throw std::invalid_argument("cqtf: needs n > r");
    if (budget_v < 0.0) throw std::invalid_argument("cqtf: budget must be >= 0");
  }
};

/// Joint estimation of several quantile levels with per-level budgets and
/// the elementwise non-crossing constraint.
struct MultiQuantileProblem {
  Signal y;
  std::vector<QuantileLevel> levels;  // strictly increasing
  DiffOrder r;
  std::vector<double> budgets;

  void validate() const {
    if (y.size() <= r.value()) throw std::invalid_argument("multi-quantile: needs n > r");
    if (levels.empty()) throw std::invalid_argument("multi-quantile: needs >= 1 level");
    if (levels.size() != budgets.size()) {
      throw std::invalid_argument("multi-quantile: budgets must match levels");
    }
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
      if (!(levels[k].value() < levels[k + 1].value())) {
        throw std::invalid_argument("multi-quantile: levels must be strictly increasing");
      }
    }
    for (double v : budgets) {
      if (v < 0.0) throw std::invalid_argument("multi-quantile: budgets must be >= 0");
    }
  }
};

/// Threshold below which an r-th difference does not count as a knot.
inline double df_epsilon(const Signal& y) {
  double y_inf = 0.0;
  for (double v : y) y_inf = std::max(y_inf, std::abs(v));
  return 1e-6 * (1.0 + y_inf);
}

/// Number of r-th differences exceeding eps in magnitude.
inline std::size_t knot_count(const Signal& theta, DiffOrder r, double eps) {
  const std::vector<double> d = detail::diff(theta.values(), r.value());
  std::size_t k = 0;
  for (double x : d) {
    if (std::abs(x) > eps) ++k;
  }
  return k;
}

struct PqtfResult {
  SolveResult solve;   // objective includes the penalty term
  double tv = 0.0;     // r-th order TV of the fit
  std::size_t knots = 0;
  std::size_t df = 0;  // knots + r
  double lambda = 0.0;
  double lambda_eff = 0.0;  // lambda * n^{r-1}, the l1 weight actually applied
};

inline PqtfResult pqtf_fit(const PqtfProblem& p, const SolverConfig& cfg) {
  p.validate();
  const std::size_t n = p.y.size();
  const double scale = detail::int_pow(static_cast<double>(n), p.r.value() - 1);
  const LinearOp a = LinearOp::difference(n, p.r);
  const double lambda_eff = p.lambda * scale;
  SolveResult solve = admm_solve(p.y, p.tau, a, lambda_eff, cfg);
  const double tv = tv_r(solve.theta_hat, p.r);
  const std::size_t knots = knot_count(solve.theta_hat, p.r, df_epsilon(p.y));
  return PqtfResult{std::move(solve), tv, knots, knots + p.r.value(), p.lambda,
                    lambda_eff};
}

namespace detail {

// Empirical check-loss minimizer of a sample: the ceil(n*tau)-th order
// statistic (any point of the minimizing interval would do).
inline double empirical_quantile(const std::vector<double>& y, double tau) {
  std::vector<double> sorted(y);
  std::sort(sorted.begin(), sorted.end());
  const double k = std::ceil(tau * static_cast<double>(sorted.size()));
  const std::size_t idx =
      static_cast<std::size_t>(std::clamp<double>(k, 1.0, static_cast<double>(sorted.size())));
  return sorted[idx - 1];
}

// Orthonormal polynomial basis of degree < r on the standardized grid,
// built by twice-applied modified Gram-Schmidt. Column-major n x r.
inline std::vector<double> polynomial_basis(std::size_t n, std::size_t r) {
  std::vector<double> b(n * r);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (2.0 * static_cast<double>(i + 1) - (dn + 1.0)) / dn;
    double pw = 1.0;
    for (std::size_t k = 0; k < r; ++k) {
      b[k * n + i] = pw;
      pw *= x;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < r; ++k) {
      double* col = &b[k * n];
      for (std::size_t j = 0; j < k; ++j) {
        const double* prev = &b[j * n];
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += col[i] * prev[i];
        for (std::size_t i = 0; i < n; ++i) col[i] -= dot * prev[i];
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) norm += col[i] * col[i];
      norm = std::sqrt(norm);
      if (!(norm > 0.0)) throw std::runtime_error("polynomial basis degenerate");
      for (std::size_t i = 0; i < n; ++i) col[i] /= norm;
    }
  }
  return b;
}

// Check-loss fit over the span of an orthonormal basis: ADMM with the
// single split u = y - B beta, where B^T B = I makes the beta update a
// plain projection.
inline SolveResult polynomial_check_fit(const Signal& y, QuantileLevel tau,
                                        std::size_t r, const SolverConfig& cfg) {
  const std::size_t n = y.size();
  if (r == 1) {
    const double c = empirical_quantile(y.values(), tau.value());
    Signal theta(std::vector<double>(n, c));
    const double obj = check_objective(y, theta, tau);
    return SolveResult{theta, obj, 0, 0.0, 0.0, true};
  }
  const std::vector<double> basis = polynomial_basis(n, r);
  std::vector<double> beta(r, 0.0), theta(y.values()), u(n, 0.0), p(n, 0.0);
  std::vector<double> du(n, 0.0);
  double rho = cfg.rho;
  int adaptations = 0;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  double y_norm = 0.0;
  for (double v : y) y_norm += v * v;
  y_norm = std::sqrt(y_norm);

  double prim = 0.0, dual = 0.0;
  bool converged = false;
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    // beta = B^T (y - u + p); theta = B beta
    for (std::size_t k = 0; k < r; ++k) {
      const double* col = &basis[k * n];
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += col[i] * (y[i] - u[i] + p[i]);
      beta[k] = dot;
    }
    std::fill(theta.begin(), theta.end(), 0.0);
    for (std::size_t k = 0; k < r; ++k) {
      const double* col = &basis[k * n];
      for (std::size_t i = 0; i < n; ++i) theta[i] += beta[k] * col[i];
    }
    const double gamma = 1.0 / rho;
    double prim_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u_new = prox_check(y[i] - theta[i] + p[i], tau, gamma);
      du[i] = u_new - u[i];
      u[i] = u_new;
      const double rr = y[i] - theta[i] - u_new;
      p[i] += rr;
      prim_sq += rr * rr;
    }
    double dual_sq = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      const double* col = &basis[k * n];
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += col[i] * du[i];
      dual_sq += dot * dot;
    }
    prim = std::sqrt(prim_sq);
    dual = rho * std::sqrt(dual_sq);
    double th_norm = 0.0, u_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      th_norm += theta[i] * theta[i];
      u_norm += u[i] * u[i];
    }
    const double eps_pri =
        sqrt_n * cfg.eps_abs +
        cfg.eps_rel * std::max({std::sqrt(th_norm), std::sqrt(u_norm), y_norm});
    double pb = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      const double* col = &basis[k * n];
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += col[i] * p[i];
      pb += dot * dot;
    }
    const double eps_dual =
        std::sqrt(static_cast<double>(r)) * cfg.eps_abs + cfg.eps_rel * rho * std::sqrt(pb);
    if (prim <= eps_pri && dual <= eps_dual) {
      converged = true;
      ++it;
      break;
    }
    if (cfg.adaptive_rho && adaptations < 30) {
      if (prim > 10.0 * dual) {
        rho *= 2.0;
        for (double& v : p) v *= 0.5;
        ++adaptations;
      } else if (dual > 10.0 * prim) {
        rho *= 0.5;
        for (double& v : p) v *= 2.0;
        ++adaptations;
      }
    }
  }
  Signal theta_hat(theta);
  const double obj = check_objective(y, theta_hat, tau);
  return SolveResult{theta_hat, obj, it, prim, dual, converged};
}

}  // namespace detail

struct CqtfResult {
  SolveResult solve;  // objective is the check objective (no penalty term)
  double tv = 0.0;
  double lambda = 0.0;  // penalty that realized the budget (0 when unused)
  std::size_t bisections = 0;
  bool bisection_converged = true;
};

/// Budgeted fit via bisection over the penalty path. Exact early exits:
/// the data itself when it already satisfies the budget, and the best
/// polynomial fit when the budget is zero.
inline CqtfResult cqtf_fit(const CqtfProblem& p, const SolverConfig& cfg) {
  p.validate();
  const std::size_t n = p.y.size();

  const double tv_data = tv_r(p.y, p.r);
  if (tv_data <= p.budget_v) {
    return CqtfResult{SolveResult{p.y, 0.0, 0, 0.0, 0.0, true}, tv_data, 0.0, 0, true};
  }
  if (p.budget_v == 0.0) {
    SolveResult solve = detail::polynomial_check_fit(p.y, p.tau, p.r.value(), cfg);
    const double tv = tv_r(solve.theta_hat, p.r);
    const bool ok = solve.converged;
    return CqtfResult{std::move(solve), tv, 0.0, 0, ok};
  }

  const double scale = detail::int_pow(static_cast<double>(n), p.r.value() - 1);
  const LinearOp a = LinearOp::difference(n, p.r);
  detail::BudgetBisection bi =
      detail::budget_bisection(p.y, p.tau, a, p.budget_v / scale, scale, cfg);
  return CqtfResult{std::move(*bi.best), bi.image_l1 * scale, bi.lambda, bi.bisections,
                    bi.found_feasible};
}

/// Joint multi-quantile fit. Per-level splits mirror the budgeted solver
/// (check-loss block, l1-ball block for the differences) plus one shared
/// consensus block projected coordinate-wise onto the monotone cone across
/// levels. The returned fits are snapped to exact non-crossing.
inline std::vector<SolveResult> multi_quantile_fit(const MultiQuantileProblem& p,
                                                   const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  const std::size_t levels = p.levels.size();
  if (levels == 1) {
    CqtfResult single = cqtf_fit(CqtfProblem{p.y, p.levels[0], p.r, p.budgets[0]}, cfg);
    return {std::move(single.solve)};
  }

  const std::size_t n = p.y.size();
  const std::size_t m = n - p.r.value();
  const double scale = detail::int_pow(static_cast<double>(n), p.r.value() - 1);
  const LinearOp a = LinearOp::difference(n, p.r);
  const detail::NormalSolver solver(a, 2.0, 1.0);
  const std::vector<double>& y = p.y.values();
  double y_norm = 0.0;
  for (double v : y) y_norm += v * v;
  y_norm = std::sqrt(y_norm);

  std::vector<double> radius(levels);
  for (std::size_t k = 0; k < levels; ++k) radius[k] = p.budgets[k] / scale;

  // per-level iterates
  std::vector<std::vector<double>> theta(levels, y), a_theta(levels),
      u(levels, std::vector<double>(n, 0.0)), w(levels),
      v(levels, y), dp(levels, std::vector<double>(n, 0.0)),
      dq(levels, std::vector<double>(m, 0.0)), ds(levels, std::vector<double>(n, 0.0)),
      du(levels, std::vector<double>(n, 0.0)), dw(levels, std::vector<double>(m, 0.0)),
      dv(levels, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < levels; ++k) {
    a.apply(theta[k], w[k]);
    a_theta[k] = w[k];
  }

  double rho = cfg.rho;
  int adaptations = 0;
  const double sqrt_dim_pri = std::sqrt(static_cast<double>(levels * (2 * n + m)));
  const double sqrt_dim_dual = std::sqrt(static_cast<double>(levels * n));

  std::vector<double> rhs(n), tmp_n(n), tmp_m(m), scratch, stack(levels);
  double prim = 0.0, dual = 0.0;
  bool converged = false;
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    double prim_sq = 0.0, dual_sq = 0.0, mx = 0.0, nz = 0.0, dref = 0.0;
    for (std::size_t k = 0; k < levels; ++k) {
      // theta_k update: (2I + A^T A) theta = (y-u+p) + A^T(w-q) + (v-s)
      for (std::size_t j = 0; j < m; ++j) tmp_m[j] = w[k][j] - dq[k][j];
      a.apply_adjoint(tmp_m, rhs);
      for (std::size_t i = 0; i < n; ++i) {
        rhs[i] += (y[i] - u[k][i] + dp[k][i]) + (v[k][i] - ds[k][i]);
      }
      solver.solve(rhs, theta[k]);
      a.apply(theta[k], a_theta[k]);

      const double gamma = 1.0 / rho;
      for (std::size_t i = 0; i < n; ++i) {
        const double u_new = prox_check(y[i] - theta[k][i] + dp[k][i], p.levels[k], gamma);
        du[k][i] = u_new - u[k][i];
        u[k][i] = u_new;
      }
      for (std::size_t j = 0; j < m; ++j) tmp_m[j] = a_theta[k][j] + dq[k][j];
      dw[k] = w[k];
      w[k] = tmp_m;
      l1_ball_project_in_place(w[k], radius[k], scratch);
      for (std::size_t j = 0; j < m; ++j) dw[k][j] = w[k][j] - dw[k][j];
    }
    // shared monotone block: coordinate-wise isotonic projection across levels
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < levels; ++k) stack[k] = theta[k][i] + ds[k][i];
      monotone_project_in_place(stack);
      for (std::size_t k = 0; k < levels; ++k) {
        dv[k][i] = stack[k] - v[k][i];
        v[k][i] = stack[k];
      }
    }
    // dual ascent + residuals
    for (std::size_t k = 0; k < levels; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r1 = y[i] - theta[k][i] - u[k][i];
        const double r3 = theta[k][i] - v[k][i];
        dp[k][i] += r1;
        ds[k][i] += r3;
        prim_sq += r1 * r1 + r3 * r3;
        mx += 2.0 * theta[k][i] * theta[k][i];
        nz += u[k][i] * u[k][i] + v[k][i] * v[k][i];
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double r2 = a_theta[k][j] - w[k][j];
        dq[k][j] += r2;
        prim_sq += r2 * r2;
        mx += a_theta[k][j] * a_theta[k][j];
        nz += w[k][j] * w[k][j];
      }
      a.apply_adjoint(dw[k], tmp_n);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = rho * (du[k][i] - tmp_n[i] - dv[k][i]);
        dual_sq += s * s;
      }
      a.apply_adjoint(dq[k], tmp_n);
      for (std::size_t i = 0; i < n; ++i) {
        const double g = rho * (dp[k][i] - tmp_n[i] - ds[k][i]);
        dref += g * g;
      }
    }
    prim = std::sqrt(prim_sq);
    dual = std::sqrt(dual_sq);
    const double eps_pri =
        sqrt_dim_pri * cfg.eps_abs +
        cfg.eps_rel * std::max({std::sqrt(mx), std::sqrt(nz),
                                y_norm * std::sqrt(static_cast<double>(levels))});
    const double eps_dual = sqrt_dim_dual * cfg.eps_abs + cfg.eps_rel * std::sqrt(dref);
    if (prim <= eps_pri && dual <= eps_dual) {
      converged = true;
      ++it;
      break;
    }
    if (cfg.adaptive_rho && adaptations < 30) {
      const auto rescale = [&](double f) {
        for (std::size_t k = 0; k < levels; ++k) {
          for (double& x : dp[k]) x *= f;
          for (double& x : dq[k]) x *= f;
          for (double& x : ds[k]) x *= f;
        }
      };
      if (prim > 10.0 * dual) {
        rho *= 2.0;
        rescale(0.5);
        ++adaptations;
      } else if (dual > 10.0 * prim) {
        rho *= 0.5;
        rescale(2.0);
        ++adaptations;
      }
    }
  }

  // snap to exact non-crossing
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < levels; ++k) stack[k] = theta[k][i];
    monotone_project_in_place(stack);
    for (std::size_t k = 0; k < levels; ++k) theta[k][i] = stack[k];
  }

  std::vector<SolveResult> out;
  out.reserve(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    Signal theta_hat(theta[k]);
    const double obj = check_objective(p.y, theta_hat, p.levels[k]);
    out.push_back(SolveResult{std::move(theta_hat), obj, it, prim, dual, converged});
  }
  return out;
}

}  // namespace qtf
