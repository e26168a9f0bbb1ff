#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qtf/rng.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// One of the six generative models used by the benchmark harness.
struct ScenarioSpec {
  int id = 1;              // 1..6
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (id < 1 || id > 6) throw std::invalid_argument("scenario id must be in 1..6");
    if (n < 10) throw std::invalid_argument("scenario size must be >= 10");
  }
};

namespace detail {

// Piecewise constant base signal: 1 on the first and last thirds, 0 in
// between (two knots).
inline double piecewise_constant_base(std::size_t i, std::size_t n) {
  const std::size_t third = n / 3;
  return (i + 1 <= third || i + 1 >= n - third + 1) ? 1.0 : 0.0;
}

// Base (median) signal of the scenario.
inline double scenario_base(int id, std::size_t i, std::size_t n) {
  const double frac = static_cast<double>(i + 1) / static_cast<double>(n);
  switch (id) {
    case 1:
    case 2:
    case 3:
      return piecewise_constant_base(i, n);
    case 4:
      return (i + 1 <= n / 2) ? 3.0 * frac : 3.0 * (1.0 - frac);
    case 5:
      return std::cos(6.0 * M_PI * frac);
    case 6:
      return 0.0;
    default:
      throw std::invalid_argument("invalid scenario id");
  }
}

// Heteroscedastic scale multiplying the error draw at position i.
inline double scenario_error_scale(int id, std::size_t i, std::size_t n) {
  const double frac = static_cast<double>(i + 1) / static_cast<double>(n);
  switch (id) {
    case 3:
      return std::sqrt(frac);
    case 6:
      return (i + 1 <= n / 2) ? (0.25 * std::sqrt(frac) + 1.375) / 3.0
                              : (7.0 * std::sqrt(frac) - 2.0) / 3.0;
    default:
      return 1.0;
  }
}

inline double scenario_error_draw(int id, CounterRng& rng) {
  switch (id) {
    case 1:
      return rng.next_normal();
    case 2:
    case 5:
      return rng.next_cauchy();
    case 3:
    case 6:
      return rng.next_t2();
    case 4:
      return rng.next_t3();
    default:
      throw std::invalid_argument("invalid scenario id");
  }
}

inline double scenario_error_quantile(int id, double tau) {
  switch (id) {
    case 1:
      return normal_quantile(tau);
    case 2:
    case 5:
      return cauchy_quantile(tau);
    case 3:
    case 6:
      return student_t2_quantile(tau);
    case 4:
      return student_t3_quantile(tau);
    default:
      throw std::invalid_argument("invalid scenario id");
  }
}

}  // namespace detail

/// True tau-quantile vector of the scenario: the base signal plus the
/// error tau-quantile, scaled coordinate-wise where the errors are
/// heteroscedastic.
inline Signal true_quantile(const ScenarioSpec& spec, QuantileLevel tau) {
  spec.validate();
  std::vector<double> theta(spec.n);
  const double q = detail::scenario_error_quantile(spec.id, tau.value());
  for (std::size_t i = 0; i < spec.n; ++i) {
    theta[i] = detail::scenario_base(spec.id, i, spec.n) +
               q * detail::scenario_error_scale(spec.id, i, spec.n);
  }
  return Signal(std::move(theta));
}

/// Draw one data vector. Deterministic given (seed, replicate); the noise
/// amplitude exists as a test hook (amplitude 0 returns the median curve).
inline Signal generate(const ScenarioSpec& spec, std::uint64_t replicate = 0,
                       double noise_amplitude = 1.0) {
  spec.validate();
  CounterRng rng = CounterRng::stream(spec.seed, replicate);
  std::vector<double> y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double eps = detail::scenario_error_draw(spec.id, rng) *
                       detail::scenario_error_scale(spec.id, i, spec.n);
    y[i] = detail::scenario_base(spec.id, i, spec.n) + noise_amplitude * eps;
  }
  return Signal(std::move(y));
}

}  // namespace qtf
