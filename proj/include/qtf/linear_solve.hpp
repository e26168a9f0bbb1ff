#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

#include "qtf/linear_op.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// Thrown when a supposedly SPD system fails to factorize; callers may
/// retry with a larger diagonal shift.
struct factorization_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization of a symmetric positive definite band matrix.
class BandedCholesky {
 public:
  explicit BandedCholesky(const BandMatrix& s) : l_(s.dim(), s.bandwidth()) {
    const std::size_t n = s.dim();
    const std::size_t bw = s.bandwidth();
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k0 = (j > bw) ? j - bw : 0;
      double diag = s.at(0, j);
      for (std::size_t k = k0; k < j; ++k) {
        const double ljk = l_.at(j - k, k);
        diag -= ljk * ljk;
      }
      if (!(diag > 0.0) || !std::isfinite(diag)) {
        throw factorization_error("banded Cholesky: matrix not positive definite");
      }
      const double ljj = std::sqrt(diag);
      l_.at(0, j) = ljj;
      const std::size_t imax = std::min(j + bw, n - 1);
      for (std::size_t i = j + 1; i <= imax; ++i) {
        const std::size_t kk0 = (i > bw) ? i - bw : 0;
        double s_ij = s.at(i - j, j);
        for (std::size_t k = std::max(k0, kk0); k < j; ++k) {
          s_ij -= l_.at(i - k, k) * l_.at(j - k, k);
        }
        l_.at(i - j, j) = s_ij / ljj;
      }
    }
  }

  void solve_in_place(std::vector<double>& b) const {
    const std::size_t n = l_.dim();
    const std::size_t bw = l_.bandwidth();
    // forward: L z = b
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k0 = (i > bw) ? i - bw : 0;
      double s = b[i];
      for (std::size_t k = k0; k < i; ++k) s -= l_.at(i - k, k) * b[k];
      b[i] = s / l_.at(0, i);
    }
    // backward: L^T x = z
    for (std::size_t ii = n; ii-- > 0;) {
      const std::size_t imax = std::min(ii + bw, n - 1);
      double s = b[ii];
      for (std::size_t k = ii + 1; k <= imax; ++k) s -= l_.at(k - ii, ii) * b[k];
      b[ii] = s / l_.at(0, ii);
    }
  }

  std::vector<double> solve(std::vector<double> b) const {
    solve_in_place(b);
    return b;
  }

 private:
  BandMatrix l_;
};

/// Dense Cholesky factorization (row-major lower triangle).
class DenseCholesky {
 public:
  DenseCholesky(std::size_t n, std::vector<double> matrix_row_major)
      : n_(n), a_(std::move(matrix_row_major)) {
    if (a_.size() != n * n) throw std::invalid_argument("dense Cholesky: bad size");
    for (std::size_t j = 0; j < n_; ++j) {
      double diag = a_[j * n_ + j];
      for (std::size_t k = 0; k < j; ++k) diag -= a_[j * n_ + k] * a_[j * n_ + k];
      if (!(diag > 0.0) || !std::isfinite(diag)) {
        throw factorization_error("dense Cholesky: matrix not positive definite");
      }
      a_[j * n_ + j] = std::sqrt(diag);
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = a_[i * n_ + j];
        for (std::size_t k = 0; k < j; ++k) s -= a_[i * n_ + k] * a_[j * n_ + k];
        a_[i * n_ + j] = s / a_[j * n_ + j];
      }
    }
  }

  void solve_in_place(std::vector<double>& b) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= a_[i * n_ + k] * b[k];
      b[i] = s / a_[i * n_ + i];
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = b[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= a_[k * n_ + ii] * b[k];
      b[ii] = s / a_[ii * n_ + ii];
    }
  }

 private:
  std::size_t n_;
  std::vector<double> a_;  // holds L in the lower triangle after factorization
};

namespace detail {

// Jacobi-preconditioned conjugate gradient on the normal operator
// rho1*I + rho2*A^T A. Relative tolerance on the residual.
class NormalCg {
 public:
  NormalCg(const LinearOp& a, double rho1, double rho2, double rel_tol = 1e-9)
      : a_(&a), rho1_(rho1), rho2_(rho2), rel_tol_(rel_tol),
        inv_diag_(a.normal_diag(rho1, rho2)) {
    for (double& d : inv_diag_) d = 1.0 / d;
  }

  void solve(const std::vector<double>& b, std::vector<double>& x) const {
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, 0.0);
    std::vector<double> r(n), z(n), p(n), ap(n), tmp_rows;
    apply_normal(x, ap, tmp_rows);
    double bnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = b[i] - ap[i];
      bnorm += b[i] * b[i];
    }
    bnorm = std::sqrt(bnorm);
    const double stop = rel_tol_ * (bnorm > 0 ? bnorm : 1.0);
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = inv_diag_[i] * r[i];
      rz += r[i] * z[i];
    }
    p = z;
    const std::size_t max_iter = 10 * n + 100;
    for (std::size_t it = 0; it < max_iter; ++it) {
      double rnorm = 0.0;
      for (std::size_t i = 0; i < n; ++i) rnorm += r[i] * r[i];
      if (std::sqrt(rnorm) <= stop) break;
      apply_normal(p, ap, tmp_rows);
      double pap = 0.0;
      for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
      if (pap <= 0.0) break;
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      double rz_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = inv_diag_[i] * r[i];
        rz_new += r[i] * z[i];
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }

 private:
  void apply_normal(const std::vector<double>& x, std::vector<double>& out,
                    std::vector<double>& rows) const {
    a_->apply(x, rows);
    a_->apply_adjoint(rows, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = rho1_ * x[i] + rho2_ * out[i];
  }

  const LinearOp* a_;
  double rho1_, rho2_, rel_tol_;
  std::vector<double> inv_diag_;
};

// Strategy object for the repeated theta-updates: banded Cholesky when the
// band profile is narrow, dense Cholesky for small mid-band systems, and
// preconditioned CG when neither keeps memory linear.
class NormalSolver {
 public:
  static constexpr std::size_t kMaxBand = 128;
  static constexpr std::size_t kMaxDense = 4096;

  NormalSolver(const LinearOp& a, double rho1, double rho2) {
    if (a.band_width() <= kMaxBand) {
      banded_ = std::make_unique<BandedCholesky>(a.normal_band(rho1, rho2));
    } else if (a.cols() <= kMaxDense) {
      const std::size_t n = a.cols();
      BandMatrix band = a.normal_band(rho1, rho2);
      std::vector<double> full(n * n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k <= band.bandwidth() && j + k < n; ++k) {
          full[(j + k) * n + j] = band.at(k, j);
          full[j * n + (j + k)] = band.at(k, j);
        }
      }
      dense_ = std::make_unique<DenseCholesky>(n, std::move(full));
    } else {
      cg_ = std::make_unique<NormalCg>(a, rho1, rho2);
    }
  }

  void solve(const std::vector<double>& rhs, std::vector<double>& x) const {
    if (banded_) {
      x = rhs;
      banded_->solve_in_place(x);
    } else if (dense_) {
      x = rhs;
      dense_->solve_in_place(x);
    } else {
      cg_->solve(rhs, x);  // warm-started from the previous x
    }
  }

 private:
  std::unique_ptr<BandedCholesky> banded_;
  std::unique_ptr<DenseCholesky> dense_;
  std::unique_ptr<NormalCg> cg_;
};

}  // namespace detail

/// Solve (rho1*I + rho2*A^T A) theta = rhs. Uses a banded Cholesky of
/// bandwidth band_width(A) when the band is narrow, a dense factorization
/// for small systems, and diagonally preconditioned CG otherwise.
inline Signal banded_spd_solve(const LinearOp& a, const Signal& rhs, double rho1,
                               double rho2) {
  if (rhs.size() != a.cols()) {
    throw std::invalid_argument("banded_spd_solve: rhs length mismatch");
  }
  if (!(rho1 > 0.0)) throw std::invalid_argument("banded_spd_solve: rho1 must be > 0");
  detail::NormalSolver solver(a, rho1, rho2);
  std::vector<double> x;
  solver.solve(rhs.values(), x);
  return Signal(std::move(x));
}

}  // namespace qtf
