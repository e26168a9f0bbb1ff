#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qtf/signal.hpp"

namespace qtf {

/// Symmetric matrix in lower band storage: entry (i+k, i) lives at
/// band(k, i) for 0 <= k <= bandwidth.
class BandMatrix {
 public:
  BandMatrix(std::size_t dim, std::size_t bandwidth)
      : dim_(dim), bw_(bandwidth), data_((bandwidth + 1) * dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t bandwidth() const { return bw_; }

  double& at(std::size_t diag, std::size_t col) { return data_[diag * dim_ + col]; }
  double at(std::size_t diag, std::size_t col) const { return data_[diag * dim_ + col]; }

 private:
  std::size_t dim_, bw_;
  std::vector<double> data_;
};

/// Sparse row-major linear operator with a known band profile. Covers the
/// difference operators, lattice edge incidences, explicit dense matrices,
/// and the empty operator used when no penalty rows exist.
class LinearOp {
 public:
  /// r-th order difference operator on signals of length n ((n-r) x n).
  static LinearOp difference(std::size_t n, DiffOrder order) {
    const std::size_t r = order.value();
    if (n <= r) throw std::invalid_argument("difference operator needs n > r");
    // stencil row: coeff[k] = (-1)^{r-k} * C(r,k), columns j..j+r
    std::vector<double> coeff(r + 1);
    coeff[0] = (r % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t k = 1; k <= r; ++k) {
      coeff[k] = -coeff[k - 1] * static_cast<double>(r - k + 1) / static_cast<double>(k);
    }
    LinearOp op;
    op.rows_ = n - r;
    op.cols_ = n;
    op.band_width_ = r;
    op.row_ptr_.reserve(op.rows_ + 1);
    op.row_ptr_.push_back(0);
    op.col_.reserve(op.rows_ * (r + 1));
    op.val_.reserve(op.rows_ * (r + 1));
    for (std::size_t j = 0; j < op.rows_; ++j) {
      for (std::size_t k = 0; k <= r; ++k) {
        op.col_.push_back(j + k);
        op.val_.push_back(coeff[k]);
      }
      op.row_ptr_.push_back(op.col_.size());
    }
    return op;
  }

  /// Edge incidence of the d-dimensional lattice {1..m}^d, every
  /// axis-aligned nearest-neighbor edge exactly once, each row scaled by
  /// `scale`. Edges are ordered lexicographically by (axis, node index);
  /// row value is scale * (theta[v + stride] - theta[v]) in row-major
  /// flattening (last axis fastest).
  static LinearOp lattice_incidence(std::size_t side, std::size_t dims, double scale) {
    if (side < 2) throw std::invalid_argument("lattice incidence needs side >= 2");
    if (dims < 1) throw std::invalid_argument("lattice incidence needs dims >= 1");
    std::size_t n = 1;
    for (std::size_t d = 0; d < dims; ++d) n *= side;
    LinearOp op;
    op.cols_ = n;
    op.rows_ = dims * (n / side) * (side - 1);
    op.band_width_ = 1;
    op.row_ptr_.reserve(op.rows_ + 1);
    op.row_ptr_.push_back(0);
    op.col_.reserve(op.rows_ * 2);
    op.val_.reserve(op.rows_ * 2);
    // stride of axis a is side^{dims-1-a}
    for (std::size_t axis = 0; axis < dims; ++axis) {
      std::size_t stride = 1;
      for (std::size_t d = axis + 1; d < dims; ++d) stride *= side;
      if (stride > op.band_width_) op.band_width_ = stride;
      for (std::size_t v = 0; v < n; ++v) {
        const std::size_t coord = (v / stride) % side;
        if (coord + 1 == side) continue;
        op.col_.push_back(v);
        op.val_.push_back(-scale);
        op.col_.push_back(v + stride);
        op.val_.push_back(scale);
        op.row_ptr_.push_back(op.col_.size());
      }
    }
    if (op.row_ptr_.size() != op.rows_ + 1) {
      throw std::logic_error("lattice incidence row count mismatch");
    }
    return op;
  }

  /// Dense rows-by-cols matrix given in row-major order.
  static LinearOp dense(std::size_t rows, std::size_t cols,
                        const std::vector<double>& row_major) {
    if (row_major.size() != rows * cols) {
      throw std::invalid_argument("dense operator: size mismatch");
    }
    LinearOp op;
    op.rows_ = rows;
    op.cols_ = cols;
    op.band_width_ = cols > 0 ? cols - 1 : 0;
    op.row_ptr_.reserve(rows + 1);
    op.row_ptr_.push_back(0);
    op.col_.reserve(rows * cols);
    op.val_.reserve(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        op.col_.push_back(j);
        op.val_.push_back(row_major[i * cols + j]);
      }
      op.row_ptr_.push_back(op.col_.size());
    }
    return op;
  }

  /// Operator with no rows (penalty absent).
  static LinearOp zero(std::size_t cols) {
    LinearOp op;
    op.rows_ = 0;
    op.cols_ = cols;
    op.band_width_ = 0;
    op.row_ptr_.assign(1, 0);
    return op;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  /// Maximum column spread within a row; equals the bandwidth of A^T A.
  std::size_t band_width() const { return band_width_; }

  void apply(const std::vector<double>& x, std::vector<double>& out) const {
    out.assign(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        s += val_[k] * x[col_[k]];
      }
      out[i] = s;
    }
  }

  void apply_adjoint(const std::vector<double>& w, std::vector<double>& out) const {
    out.assign(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double wi = w[i];
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        out[col_[k]] += val_[k] * wi;
      }
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> out;
    apply(x, out);
    return out;
  }

  std::vector<double> apply_adjoint(const std::vector<double>& w) const {
    std::vector<double> out;
    apply_adjoint(w, out);
    return out;
  }

  /// rho1*I + rho2*A^T A in band storage.
  BandMatrix normal_band(double rho1, double rho2) const {
    BandMatrix band(cols_, band_width_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t a = row_ptr_[i]; a < row_ptr_[i + 1]; ++a) {
        for (std::size_t b = row_ptr_[i]; b <= a; ++b) {
          const std::size_t hi = col_[a], lo = col_[b];
          if (hi >= lo) {
            band.at(hi - lo, lo) += rho2 * val_[a] * val_[b];
          } else {
            band.at(lo - hi, hi) += rho2 * val_[a] * val_[b];
          }
        }
      }
    }
    for (std::size_t j = 0; j < cols_; ++j) band.at(0, j) += rho1;
    return band;
  }

  /// Diagonal of rho1*I + rho2*A^T A (Jacobi preconditioner).
  std::vector<double> normal_diag(double rho1, double rho2) const {
    std::vector<double> d(cols_, rho1);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        d[col_[k]] += rho2 * val_[k] * val_[k];
      }
    }
    return d;
  }

  /// l1 norm of A*x without materializing the image.
  double image_l1_norm(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double row = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        row += val_[k] * x[col_[k]];
      }
      s += std::abs(row);
    }
    return s;
  }

 private:
  LinearOp() = default;
  std::size_t rows_ = 0, cols_ = 0, band_width_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

}  // namespace qtf
