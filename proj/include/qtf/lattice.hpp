#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qtf/admm.hpp"
#include "qtf/linear_op.hpp"
#include "qtf/qtf.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// d-dimensional array with equal side length per axis, stored row-major
/// (last axis fastest). Entries must be finite.
class LatticeSignal {
 public:
  LatticeSignal(std::vector<double> values, std::size_t side, std::size_t dims)
      : values_(std::move(values)), side_(side), dims_(dims) {
    if (dims_ < 1) throw std::invalid_argument("lattice: dims must be >= 1");
    if (side_ < 1) throw std::invalid_argument("lattice: side must be >= 1");
    std::size_t n = 1;
    for (std::size_t d = 0; d < dims_; ++d) n *= side_;
    if (values_.size() != n) {
      throw std::invalid_argument("lattice: expected " + std::to_string(n) +
                                  " values, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("lattice: entries must be finite");
    }
  }

  std::size_t side() const { return side_; }
  std::size_t dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  /// Convenience accessor for d = 2 (row i, column j).
  double at(std::size_t i, std::size_t j) const { return values_[i * side_ + j]; }

 private:
  std::vector<double> values_;
  std::size_t side_, dims_;
};

namespace detail {

inline double lattice_edge_scale(std::size_t side, std::size_t dims) {
  return 1.0 / int_pow(static_cast<double>(side), dims - 1);
}

}  // namespace detail

/// Lattice total variation: sum of |theta_u - theta_v| over axis-aligned
/// nearest-neighbor edges, each counted once, scaled by 1/side^{d-1}.
inline double lattice_tv(const LatticeSignal& theta) {
  if (theta.side() < 2) throw std::invalid_argument("lattice_tv: side must be >= 2");
  const std::size_t side = theta.side();
  const std::size_t dims = theta.dims();
  const std::vector<double>& v = theta.values();
  double s = 0.0;
  for (std::size_t axis = 0; axis < dims; ++axis) {
    std::size_t stride = 1;
    for (std::size_t d = axis + 1; d < dims; ++d) stride *= side;
    for (std::size_t u = 0; u < v.size(); ++u) {
      const std::size_t coord = (u / stride) % side;
      if (coord + 1 == side) continue;
      s += std::abs(v[u + stride] - v[u]);
    }
  }
  return detail::lattice_edge_scale(side, dims) * s;
}

/// Quantile total variation denoising problem, in exactly one of the
/// penalized (lambda) or constrained (budget) forms.
struct QtvdProblem {
  LatticeSignal y;
  QuantileLevel tau;
  std::optional<double> budget_v;
  std::optional<double> lambda;

  void validate() const {
    if (y.side() < 2) throw std::invalid_argument("qtvd: side must be >= 2");
    if (budget_v.has_value() == lambda.has_value()) {
      throw std::invalid_argument("qtvd: set exactly one of budget_v / lambda");
    }
    if (budget_v && *budget_v < 0.0) throw std::invalid_argument("qtvd: budget must be >= 0");
    if (lambda && *lambda < 0.0) throw std::invalid_argument("qtvd: lambda must be >= 0");
  }
};

struct QtvdResult {
  SolveResult solve;       // theta_hat holds the flattened row-major fit
  LatticeSignal theta_hat; // same fit with the lattice shape attached
  double tv = 0.0;
  double lambda = 0.0;
  std::size_t bisections = 0;
  bool bisection_converged = true;
};

/// Fit the lattice denoiser. The penalized form runs the generic solver on
/// the scaled edge incidence; the constrained form bisects the penalty.
inline QtvdResult qtvd_fit(const QtvdProblem& p, const SolverConfig& cfg) {
  p.validate();
  const std::size_t side = p.y.side();
  const std::size_t dims = p.y.dims();
  const double scale = detail::lattice_edge_scale(side, dims);
  const Signal y_flat(p.y.values());

  const auto finish = [&](SolveResult&& res, double lambda, std::size_t bisections,
                          bool bis_ok) {
    LatticeSignal shaped(res.theta_hat.values(), side, dims);
    const double tv = lattice_tv(shaped);
    return QtvdResult{std::move(res), std::move(shaped), tv, lambda, bisections, bis_ok};
  };

  if (p.lambda) {
    const LinearOp a = LinearOp::lattice_incidence(side, dims, scale);
    SolveResult res = admm_solve(y_flat, p.tau, a, *p.lambda, cfg);
    return finish(std::move(res), *p.lambda, 0, true);
  }

  // constrained mode
  const double v = *p.budget_v;
  const double tv_data = lattice_tv(p.y);
  if (tv_data <= v) {
    return finish(SolveResult{y_flat, 0.0, 0, 0.0, 0.0, true}, 0.0, 0, true);
  }
  if (v == 0.0) {
    const double c = detail::empirical_quantile(p.y.values(), p.tau.value());
    Signal theta(std::vector<double>(p.y.size(), c));
    const double obj = check_objective(y_flat, theta, p.tau);
    return finish(SolveResult{std::move(theta), obj, 0, 0.0, 0.0, true}, 0.0, 0, true);
  }
  const LinearOp a = LinearOp::lattice_incidence(side, dims, scale);
  detail::BudgetBisection bi = detail::budget_bisection(y_flat, p.tau, a, v, 1.0, cfg);
  return finish(std::move(*bi.best), bi.lambda, bi.bisections, bi.found_feasible);
}

}  // namespace qtf
