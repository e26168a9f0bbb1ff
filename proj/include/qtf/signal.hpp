#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qtf {

/// Quantile level tau, restricted to the open interval (0,1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau) : tau_(tau) {
    if (!(tau > 0.0) || !(tau < 1.0) || !std::isfinite(tau)) {
      throw std::invalid_argument("quantile level must lie in (0,1), got " +
                                  std::to_string(tau));
    }
  }
  double value() const { return tau_; }

 private:
  double tau_;
};

/// Order of the discrete difference operator, r >= 1.
class DiffOrder {
 public:
  explicit DiffOrder(std::size_t r) : r_(r) {
    if (r < 1) throw std::invalid_argument("difference order must be >= 1");
  }
  std::size_t value() const { return r_; }

 private:
  std::size_t r_;
};

/// Immutable finite real sequence. Construction rejects NaN/Inf; all
/// downstream operations may assume finite entries.
class Signal {
 public:
  explicit Signal(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("signal must be non-empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw std::invalid_argument("signal entry " + std::to_string(i) +
                                    " is not finite");
      }
    }
  }

  static Signal zeros(std::size_t n) { return Signal(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  std::vector<double>::const_iterator begin() const { return values_.begin(); }
  std::vector<double>::const_iterator end() const { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// Asymmetric check loss max{tau*x, (tau-1)*x}; zero iff x == 0.
inline double check_loss(double x, QuantileLevel tau) {
  const double t = tau.value();
  return std::max(t * x, (t - 1.0) * x);
}

namespace detail {

// r-fold first differencing of a raw buffer; result has length n - r.
inline std::vector<double> diff(const std::vector<double>& v, std::size_t r) {
  if (v.size() <= r) {
    throw std::invalid_argument("difference of order " + std::to_string(r) +
                                " needs length > r, got " +
                                std::to_string(v.size()));
  }
  std::vector<double> d(v);
  std::size_t len = d.size();
  for (std::size_t pass = 0; pass < r; ++pass) {
    for (std::size_t i = 0; i + 1 < len; ++i) d[i] = d[i + 1] - d[i];
    --len;
  }
  d.resize(len);
  return d;
}

// pow(n, k) computed by repeated multiplication; exact in double for the
// sizes handled here.
inline double int_pow(double base, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 0; i < k; ++i) out *= base;
  return out;
}

// Sum in fixed left-to-right order (reproducibility contract).
inline double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

/// Discrete differences of order r, computed as r passes of first
/// differencing. Output length is n - r.
inline Signal diff_apply(const Signal& theta, DiffOrder r) {
  return Signal(detail::diff(theta.values(), r.value()));
}

/// r-th order total variation: n^{r-1} * l1-norm of the r-th differences,
/// where n is the length of theta.
inline double tv_r(const Signal& theta, DiffOrder r) {
  const std::vector<double> d = detail::diff(theta.values(), r.value());
  double s = 0.0;
  for (double x : d) s += std::abs(x);
  return detail::int_pow(static_cast<double>(theta.size()), r.value() - 1) * s;
}

namespace detail {

inline double tv_of(const std::vector<double>& v, std::size_t r) {
  return tv_r(Signal(v), DiffOrder(r));
}

inline double huber_min_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    const double a = std::abs(x);
    s += std::min(a, a * a);
  }
  return s;
}

}  // namespace detail

/// Unnormalized Huber-type distance: sum_i min{|v_i|, v_i^2}.
inline double delta_sq(const Signal& v) { return detail::huber_min_sum(v.values()); }

/// Averaged Huber-type distance: (1/n) sum_i min{|v_i|, v_i^2}.
inline double delta_n_sq(const Signal& v) {
  return detail::huber_min_sum(v.values()) / static_cast<double>(v.size());
}

/// Sum of check losses of the residuals y - theta.
inline double check_objective(const Signal& y, const Signal& theta,
                              QuantileLevel tau) {
  if (y.size() != theta.size()) {
    throw std::invalid_argument("check_objective: length mismatch (" +
                                std::to_string(y.size()) + " vs " +
                                std::to_string(theta.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s += check_loss(y[i] - theta[i], tau);
  }
  return s;
}

namespace detail {

inline double check_objective_raw(const std::vector<double>& y,
                                  const std::vector<double>& theta, double tau) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = y[i] - theta[i];
    s += std::max(tau * x, (tau - 1.0) * x);
  }
  return s;
}

}  // namespace detail

/// Paired error metrics of an estimate against a reference vector.
struct RiskValue {
  double delta_n_sq = 0.0;  // averaged Huber-type distance
  double mse = 0.0;         // mean squared error
};

/// Risk of `estimate` relative to `truth`: both delta_n_sq and MSE of the
/// coordinate-wise difference. delta_n_sq <= mse always holds.
inline RiskValue risk(const Signal& estimate, const Signal& truth) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("risk: length mismatch");
  }
  RiskValue out;
  double hub = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - truth[i];
    const double a = std::abs(d);
    hub += std::min(a, a * a);
    sq += d * d;
  }
  const double n = static_cast<double>(estimate.size());
  out.delta_n_sq = hub / n;
  out.mse = sq / n;
  return out;
}

}  // namespace qtf
