#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qtf/lattice.hpp"
#include "qtf/linear_op.hpp"
#include "qtf/qtf.hpp"
#include "qtf/quantile_lasso.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// Linear program in standard form: minimize cost^T x subject to
/// eq * x = rhs and x >= lower. Small and dense on purpose.
struct LpInstance {
  std::size_t rows = 0, cols = 0;
  std::vector<double> cost;   // cols
  std::vector<double> eq;     // row-major rows x cols
  std::vector<double> rhs;    // rows
  std::vector<double> lower;  // cols

  static constexpr std::size_t kMaxCols = 400;
  static constexpr std::size_t kMaxRows = 200;

  void validate() const {
    if (cols > kMaxCols || rows > kMaxRows) {
      throw std::invalid_argument("lp: instance exceeds size caps (400 vars / 200 rows)");
    }
    if (cost.size() != cols || rhs.size() != rows || lower.size() != cols ||
        eq.size() != rows * cols) {
      throw std::invalid_argument("lp: inconsistent dimensions");
    }
    for (double v : cost)
      if (!std::isfinite(v)) throw std::invalid_argument("lp: cost not finite");
    for (double v : rhs)
      if (!std::isfinite(v)) throw std::invalid_argument("lp: rhs not finite");
    for (double v : lower)
      if (!std::isfinite(v)) throw std::invalid_argument("lp: lower bound not finite");
  }
};

struct LpSolution {
  double optimum = 0.0;
  std::vector<double> x;
};

struct lp_infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct lp_unbounded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two-phase dense simplex with Bland's pivoting rule (entering: smallest
/// eligible column; leaving: smallest basis index among min-ratio ties).
/// Deterministic, so the optimum is reproducible bit for bit.
inline LpSolution simplex_solve(const LpInstance& lp_in) {
  lp_in.validate();
  const double tol = 1e-9;
  const std::size_t n = lp_in.cols;
  std::size_t m = lp_in.rows;

  // shift to x' = x - lower >= 0
  std::vector<double> h(lp_in.rhs);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      h[i] -= lp_in.eq[i * n + j] * lp_in.lower[j];
    }
  }

  // tableau: m rows x (n + m artificials + 1 rhs)
  const std::size_t width = n + m + 1;
  const std::size_t rhs_col = width - 1;
  std::vector<double> t(m * width, 0.0);
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sgn = (h[i] < 0.0) ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t[i * width + j] = sgn * lp_in.eq[i * n + j];
    t[i * width + n + i] = 1.0;
    t[i * width + rhs_col] = sgn * h[i];
    basis[i] = n + i;
  }

  std::vector<double> z(width, 0.0);  // reduced-cost row incl. objective value slot

  const auto pivot = [&](std::size_t row, std::size_t col) {
    double* pr = &t[row * width];
    const double piv = pr[col];
    for (std::size_t j = 0; j < width; ++j) pr[j] /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row) continue;
      double* ri = &t[i * width];
      const double f = ri[col];
      if (f != 0.0) {
        for (std::size_t j = 0; j < width; ++j) ri[j] -= f * pr[j];
      }
    }
    const double f = z[col];
    if (f != 0.0) {
      for (std::size_t j = 0; j < width; ++j) z[j] -= f * pr[j];
    }
    basis[row] = col;
  };

  const auto run = [&](std::size_t allowed_cols) {
    const std::size_t max_pivots = 200000;
    for (std::size_t step = 0; step < max_pivots; ++step) {
      // Bland entering rule
      std::size_t enter = allowed_cols;
      for (std::size_t j = 0; j < allowed_cols; ++j) {
        if (z[j] < -tol) {
          enter = j;
          break;
        }
      }
      if (enter == allowed_cols) return;  // optimal
      // ratio test
      std::size_t leave = m;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = t[i * width + enter];
        if (a > tol) {
          const double ratio = t[i * width + rhs_col] / a;
          if (leave == m || ratio < best_ratio - tol ||
              (std::abs(ratio - best_ratio) <= tol && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave == m) throw lp_unbounded("lp: unbounded objective");
      pivot(leave, enter);
    }
    throw std::runtime_error("lp: pivot limit exceeded");
  };

  // phase 1: minimize the sum of artificials
  std::fill(z.begin(), z.end(), 0.0);
  for (std::size_t j = 0; j < width; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += t[i * width + j];
    if (j >= n && j < rhs_col) {
      z[j] = 1.0 - s;  // cost 1 on artificials
    } else {
      z[j] = -s;
    }
  }
  run(rhs_col);
  if (-z[rhs_col] > 1e-7) throw lp_infeasible("lp: phase 1 left a positive infeasibility");

  // drive artificials out of the basis; drop rows that prove redundant
  for (std::size_t i = 0; i < m;) {
    if (basis[i] >= n) {
      std::size_t col = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(t[i * width + j]) > tol) {
          col = j;
          break;
        }
      }
      if (col < n) {
        pivot(i, col);
        ++i;
      } else {
        // redundant row: remove it
        for (std::size_t k = i + 1; k < m; ++k) {
          std::copy(&t[k * width], &t[k * width] + width, &t[(k - 1) * width]);
          basis[k - 1] = basis[k];
        }
        --m;
      }
    } else {
      ++i;
    }
  }

  // phase 2 over the original cost
  std::fill(z.begin(), z.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) z[j] = lp_in.cost[j];
  for (std::size_t i = 0; i < m; ++i) {
    const double cb = lp_in.cost[basis[i]];
    if (cb != 0.0) {
      for (std::size_t j = 0; j < width; ++j) z[j] -= cb * t[i * width + j];
    }
  }
  run(n);  // artificial columns may not re-enter

  LpSolution out;
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) out.x[basis[i]] = t[i * width + rhs_col];
  }
  for (std::size_t j = 0; j < n; ++j) out.x[j] += lp_in.lower[j];
  double opt = 0.0;
  for (std::size_t j = 0; j < n; ++j) opt += lp_in.cost[j] * out.x[j];
  out.optimum = opt;
  return out;
}

/// An LP encoding whose first 2k variables split a free vector into
/// positive and negative parts: value_i = x_i - x_{k+i}.
struct SplitEncoding {
  LpInstance lp;
  std::size_t split_len = 0;  // k

  std::vector<double> decode(const std::vector<double>& x) const {
    std::vector<double> v(split_len);
    for (std::size_t i = 0; i < split_len; ++i) v[i] = x[i] - x[split_len + i];
    return v;
  }
};

namespace detail {

// Shared residual/difference splitting. Variables, in order:
//   theta+ (n), theta- (n), u+ (n), u- (n), w+ (m), w- (m) [, slack]
// Rows: y - theta = u+ - u-  (n rows), A theta = w+ - w-  (m rows)
// [, sum(w+ + w-) + slack = budget].
inline SplitEncoding encode_check_l1_lp(const Signal& y, double tau, const LinearOp& a,
                                        double weight_per_row, bool budgeted,
                                        double budget) {
  const std::size_t n = y.size();
  const std::size_t m = a.rows();
  const std::size_t cols = 4 * n + 2 * m + (budgeted ? 1 : 0);
  const std::size_t rows = n + m + (budgeted ? 1 : 0);
  SplitEncoding enc;
  enc.split_len = n;
  LpInstance& lp = enc.lp;
  lp.rows = rows;
  lp.cols = cols;
  lp.cost.assign(cols, 0.0);
  lp.eq.assign(rows * cols, 0.0);
  lp.rhs.assign(rows, 0.0);
  lp.lower.assign(cols, 0.0);
  lp.validate();

  const std::size_t up = 2 * n, um = 3 * n, wp = 4 * n, wm = 4 * n + m;
  for (std::size_t i = 0; i < n; ++i) {
    lp.cost[up + i] = tau;
    lp.cost[um + i] = 1.0 - tau;
  }
  if (!budgeted) {
    for (std::size_t j = 0; j < m; ++j) {
      lp.cost[wp + j] = weight_per_row;
      lp.cost[wm + j] = weight_per_row;
    }
  }

  // residual rows: theta+ - theta- + u+ - u- = y
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &lp.eq[i * cols];
    row[i] = 1.0;
    row[n + i] = -1.0;
    row[up + i] = 1.0;
    row[um + i] = -1.0;
    lp.rhs[i] = y[i];
  }
  // difference rows: A(theta+ - theta-) - w+ + w- = 0
  std::vector<double> unit(n, 0.0), img;
  for (std::size_t col = 0; col < n; ++col) {
    unit[col] = 1.0;
    a.apply(unit, img);
    unit[col] = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (img[j] != 0.0) {
        lp.eq[(n + j) * cols + col] = img[j];
        lp.eq[(n + j) * cols + n + col] = -img[j];
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    lp.eq[(n + j) * cols + wp + j] = -1.0;
    lp.eq[(n + j) * cols + wm + j] = 1.0;
  }
  if (budgeted) {
    double* row = &lp.eq[(n + m) * cols];
    for (std::size_t j = 0; j < m; ++j) {
      row[wp + j] = 1.0;
      row[wm + j] = 1.0;
    }
    row[cols - 1] = 1.0;  // slack
    lp.rhs[n + m] = budget;
  }
  return enc;
}

}  // namespace detail

/// Exact LP encoding of the penalized trend filtering objective.
inline SplitEncoding encode_pqtf_lp(const PqtfProblem& p) {
  p.validate();
  if (p.y.size() > 20) throw std::invalid_argument("encode_pqtf_lp: capped at n <= 20");
  const std::size_t n = p.y.size();
  const double scale = detail::int_pow(static_cast<double>(n), p.r.value() - 1);
  const LinearOp a = LinearOp::difference(n, p.r);
  return detail::encode_check_l1_lp(p.y, p.tau.value(), a, p.lambda * scale, false, 0.0);
}

/// Exact LP encoding of the budgeted trend filtering problem.
inline SplitEncoding encode_cqtf_lp(const CqtfProblem& p) {
  p.validate();
  if (p.y.size() > 20) throw std::invalid_argument("encode_cqtf_lp: capped at n <= 20");
  const std::size_t n = p.y.size();
  const double scale = detail::int_pow(static_cast<double>(n), p.r.value() - 1);
  const LinearOp a = LinearOp::difference(n, p.r);
  return detail::encode_check_l1_lp(p.y, p.tau.value(), a, 0.0, true,
                                    p.budget_v / scale);
}

/// Exact LP encoding of the lattice denoiser (penalized or constrained).
inline SplitEncoding encode_qtvd_lp(const QtvdProblem& p) {
  p.validate();
  if (p.y.size() > 25) throw std::invalid_argument("encode_qtvd_lp: capped at 25 nodes");
  const double scale = detail::lattice_edge_scale(p.y.side(), p.y.dims());
  const LinearOp a = LinearOp::lattice_incidence(p.y.side(), p.y.dims(), scale);
  const Signal y_flat(p.y.values());
  if (p.lambda) {
    return detail::encode_check_l1_lp(y_flat, p.tau.value(), a, *p.lambda, false, 0.0);
  }
  return detail::encode_check_l1_lp(y_flat, p.tau.value(), a, 0.0, true, *p.budget_v);
}

/// Exact LP encoding of the l1-budgeted quantile regression. The split
/// variables are the coefficients: beta_j = x_j - x_{p+j}.
inline SplitEncoding encode_l1qr_lp(const L1QrProblem& prob) {
  prob.validate();
  const std::size_t n = prob.X.rows();
  const std::size_t p = prob.X.cols();
  const std::size_t cols = 2 * p + 2 * n + 1;
  const std::size_t rows = n + 1;
  SplitEncoding enc;
  enc.split_len = p;
  LpInstance& lp = enc.lp;
  lp.rows = rows;
  lp.cols = cols;
  lp.cost.assign(cols, 0.0);
  lp.eq.assign(rows * cols, 0.0);
  lp.rhs.assign(rows, 0.0);
  lp.lower.assign(cols, 0.0);
  lp.validate();

  const std::size_t up = 2 * p, um = 2 * p + n;
  for (std::size_t i = 0; i < n; ++i) {
    lp.cost[up + i] = prob.tau.value();
    lp.cost[um + i] = 1.0 - prob.tau.value();
  }
  // rows: X(beta+ - beta-) + u+ - u- = y
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &lp.eq[i * cols];
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = prob.X(i, j);
      row[p + j] = -prob.X(i, j);
    }
    row[up + i] = 1.0;
    row[um + i] = -1.0;
    lp.rhs[i] = prob.y[i];
  }
  // budget row: sum(beta+ + beta-) + slack = V
  double* row = &lp.eq[n * cols];
  for (std::size_t j = 0; j < 2 * p; ++j) row[j] = 1.0;
  row[cols - 1] = 1.0;
  lp.rhs[n] = prob.budget_v;
  return enc;
}

}  // namespace qtf
