#pragma once

// Special functions and small numeric helpers shared by all modules.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "sudakov/errors.hpp"

namespace sudakov {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log Gamma(x) for x > 0. glibc's lgamma is accurate to a few ulp, well
/// inside 1e-13 relative; the reentrant variant avoids the global signgam.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

/// log of Gamma(a) / Gamma(b).
inline double log_gamma_ratio(double a, double b) {
  return log_gamma(a) - log_gamma(b);
}

/// exp() that refuses to silently overflow.
inline double checked_exp(double log_value, const char* what) {
  if (!std::isfinite(log_value) || log_value > 709.0) {
    throw NumericRangeError(std::string(what) + ": value out of double range (log = " +
                            std::to_string(log_value) + ")");
  }
  return std::exp(log_value);
}

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// l_p norm for p in [1, inf]. Scaled by the max entry so large p does not
/// overflow.
inline double lp_norm(std::span<const double> x, double p) {
  double mx = 0.0;
  for (double v : x) mx = std::max(mx, std::abs(v));
  if (mx == 0.0 || std::isinf(p)) return mx;
  if (p == 2.0) {
    double s = 0.0;
    for (double v : x) s += (v / mx) * (v / mx);
    return mx * std::sqrt(s);
  }
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v) / mx, p);
  return mx * std::pow(s, 1.0 / p);
}

/// log of the binomial coefficient C(n, k).
inline double log_binomial(double n, double k) {
  if (k < 0 || k > n) return -kInf;
  return log_gamma(n + 1) - log_gamma(k + 1) - log_gamma(n - k + 1);
}

/// Relative difference |a - b| / max(|a|, |b|), zero when both vanish.
inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace sudakov
