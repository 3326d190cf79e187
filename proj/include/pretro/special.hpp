#pragma once

#include <cmath>

// Numerically stable building blocks for expressions that are 0/0 at a zero
// interaction type.
namespace pretro::special {

// Below this |x| the 4th-order series is used.
inline constexpr double kSeriesThreshold = 1e-4;

// sinh(x)/x
inline double sinhc(double x) {
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sinh(x) / x;
}

// tanh(x)/x
inline double tanhc(double x) {
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0;
  }
  return std::tanh(x) / x;
}

// x / (1 - exp(-x)); equals 1 at x = 0.
inline double x_over_one_minus_exp_neg(double x) {
  if (std::abs(x) < kSeriesThreshold) return 1.0 + x / 2.0 + x * x / 12.0;
  return x / -std::expm1(-x);
}

// x / (exp(x) - 1); equals 1 at x = 0.
inline double x_over_expm1(double x) {
  if (std::abs(x) < kSeriesThreshold) return 1.0 - x / 2.0 + x * x / 12.0;
  return x / std::expm1(x);
}

// (cosh(sqrt(k2)) - 1)/k2 and sinh(sqrt(k2))/sqrt(k2), analytically continued
// to k2 < 0.
inline double coshm1_over(double k2) {
  if (std::abs(k2) < kSeriesThreshold) return 0.5 + k2 / 24.0 + k2 * k2 / 720.0;
  if (k2 > 0) return (std::cosh(std::sqrt(k2)) - 1.0) / k2;
  return (std::cos(std::sqrt(-k2)) - 1.0) / k2;
}

inline double sinh_over(double k2) {
  if (std::abs(k2) < kSeriesThreshold) return 1.0 + k2 / 6.0 + k2 * k2 / 120.0;
  if (k2 > 0) return std::sinh(std::sqrt(k2)) / std::sqrt(k2);
  return std::sin(std::sqrt(-k2)) / std::sqrt(-k2);
}

}  // namespace pretro::special
