#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qtf {

namespace detail {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator (splitmix64 run in counter mode). A draw is a
/// pure function of (key, counter), so streams derived from (seed,
/// stream_index) are independent of evaluation order across replicates.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng stream(std::uint64_t seed, std::uint64_t stream_index) {
    const std::uint64_t k =
        detail::mix64(detail::mix64(seed) ^ detail::mix64(stream_index + 0x632BE59BD9B4E019ULL));
    return CounterRng(k);
  }

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return detail::mix64(key_ ^ counter_);
  }

  /// Uniform draw strictly inside (0,1).
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal (Box-Muller, cosine branch).
  double next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Standard Cauchy via the inverse CDF.
  double next_cauchy() { return std::tan(M_PI * (next_uniform() - 0.5)); }

  /// Student t with 2 degrees of freedom via the analytic inverse CDF.
  double next_t2() {
    const double u = next_uniform();
    return (2.0 * u - 1.0) / std::sqrt(2.0 * u * (1.0 - u));
  }

  /// Student t with 3 degrees of freedom via Bailey's polar rejection.
  double next_t3() { return next_t_polar(3.0); }

 private:
  double next_t_polar(double nu) {
    for (;;) {
      const double u = 2.0 * next_uniform() - 1.0;
      const double v = 2.0 * next_uniform() - 1.0;
      const double w = u * u + v * v;
      if (w > 1.0 || w == 0.0) continue;
      return u * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
    }
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile: rational initial guess refined by one Halley
/// step against erfc, accurate to near machine precision.
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  }
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley refinement
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

inline double cauchy_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("cauchy_quantile: p must lie in (0,1)");
  }
  return std::tan(M_PI * (p - 0.5));
}

inline double student_t2_cdf(double x) {
  return 0.5 + x / (2.0 * std::sqrt(2.0 + x * x));
}

inline double student_t2_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("student_t2_quantile: p must lie in (0,1)");
  }
  return (2.0 * p - 1.0) / std::sqrt(2.0 * p * (1.0 - p));
}

inline double student_t3_cdf(double x) {
  const double s = x / std::sqrt(3.0);
  return 0.5 + (std::atan(s) + s / (1.0 + s * s)) / M_PI;
}

inline double student_t3_pdf(double x) {
  const double t = 1.0 + x * x / 3.0;
  return 2.0 / (M_PI * std::sqrt(3.0) * t * t);
}

/// Quantile of Student t with 3 degrees of freedom by Newton iteration on
/// the analytic CDF (bisection-safeguarded).
inline double student_t3_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument("student_t3_quantile: p must lie in (0,1)");
  }
  double lo = -1e12, hi = 1e12;
  double x = cauchy_quantile(p);  // heavy-tailed initial guess
  for (int it = 0; it < 200; ++it) {
    const double f = student_t3_cdf(x) - p;
    if (f > 0.0) {
      hi = std::min(hi, x);
    } else {
      lo = std::max(lo, x);
    }
    const double step = f / student_t3_pdf(x);
    double next = x - step;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace qtf
