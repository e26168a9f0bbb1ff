#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qtf/signal.hpp"

namespace qtf {

/// Proximal map of the check loss: argmin_u rho_tau(u) + (u-v)^2/(2*gamma).
/// An asymmetric soft threshold with dead zone [-gamma*(1-tau), gamma*tau].
inline double prox_check(double v, QuantileLevel tau, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_check: gamma must be > 0");
  const double t = tau.value();
  if (v > gamma * t) return v - gamma * t;
  if (v < -gamma * (1.0 - t)) return v + gamma * (1.0 - t);
  return 0.0;
}

/// Scalar soft threshold sign(v)*max(|v|-kappa, 0).
inline double soft_threshold(double v, double kappa) {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

/// Euclidean projection onto the l1 ball of the given radius, by the exact
/// sorted-threshold construction.
inline std::vector<double> l1_ball_project(std::vector<double> beta, double radius) {
  if (radius < 0.0) throw std::invalid_argument("l1_ball_project: radius must be >= 0");
  double norm1 = 0.0;
  for (double b : beta) norm1 += std::abs(b);
  if (norm1 <= radius) return beta;
  if (radius == 0.0) {
    std::fill(beta.begin(), beta.end(), 0.0);
    return beta;
  }
  std::vector<double> mag(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) mag[i] = std::abs(beta[i]);
  std::sort(mag.begin(), mag.end(), std::greater<double>());
  double cumsum = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    cumsum += mag[j];
    const double cand = (cumsum - radius) / static_cast<double>(j + 1);
    if (j + 1 == mag.size() || mag[j + 1] <= cand) {
      threshold = cand;
      break;
    }
  }
  for (double& b : beta) b = soft_threshold(b, threshold);
  return beta;
}

/// In-place projection of `w` onto the l1 ball (buffer reused by solvers).
inline void l1_ball_project_in_place(std::vector<double>& w, double radius,
                                     std::vector<double>& scratch) {
  double norm1 = 0.0;
  for (double b : w) norm1 += std::abs(b);
  if (norm1 <= radius) return;
  if (radius == 0.0) {
    std::fill(w.begin(), w.end(), 0.0);
    return;
  }
  scratch.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) scratch[i] = std::abs(w[i]);
  std::sort(scratch.begin(), scratch.end(), std::greater<double>());
  double cumsum = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < scratch.size(); ++j) {
    cumsum += scratch[j];
    const double cand = (cumsum - radius) / static_cast<double>(j + 1);
    if (j + 1 == scratch.size() || scratch[j + 1] <= cand) {
      threshold = cand;
      break;
    }
  }
  for (double& b : w) b = soft_threshold(b, threshold);
}

/// Euclidean projection onto the non-decreasing cone by pool adjacent
/// violators. Blocks take the mean of their members.
inline void monotone_project_in_place(std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n <= 1) return;
  // (value, weight) blocks kept on small stacks
  static thread_local std::vector<double> value;
  static thread_local std::vector<std::size_t> weight;
  value.clear();
  weight.clear();
  for (std::size_t i = 0; i < n; ++i) {
    value.push_back(v[i]);
    weight.push_back(1);
    while (value.size() > 1 && value[value.size() - 2] >= value.back()) {
      const double merged =
          (value[value.size() - 2] * static_cast<double>(weight[weight.size() - 2]) +
           value.back() * static_cast<double>(weight.back())) /
          static_cast<double>(weight[weight.size() - 2] + weight.back());
      weight[weight.size() - 2] += weight.back();
      value[value.size() - 2] = merged;
      value.pop_back();
      weight.pop_back();
    }
  }
  std::size_t idx = 0;
  for (std::size_t b = 0; b < value.size(); ++b) {
    for (std::size_t k = 0; k < weight[b]; ++k) v[idx++] = value[b];
  }
}

inline std::vector<double> monotone_project(std::vector<double> v) {
  monotone_project_in_place(v);
  return v;
}

}  // namespace qtf
