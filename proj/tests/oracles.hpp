#pragma once

// Closed forms and plain numerics written independently of the library, used
// as reference values in the tests.

#include <cmath>
#include <vector>

namespace oracle {

inline double sq(double x) { return x * x; }

// Optimal Gamma2(t) for teleportation; gamma1 = 2 zeta1 Gamma1.
inline double gamma2_teleport(double t, double zeta1, double Gamma1, double T) {
  const double g = 2.0 * zeta1 * Gamma1;
  const double a = std::sinh(0.5 * g * t), b = std::sinh(0.5 * g * T);
  return Gamma1 * a * a / (b * b - a * a);
}

inline double gamma2_direct(double t, double zeta1, double Gamma1, double T) {
  return gamma2_teleport(T - t, zeta1, Gamma1, T);
}

inline double filter_raw_teleport(double t, double zeta1, double zeta2, double Gamma1,
                                  double T) {
  const double g = 2.0 * zeta1 * Gamma1;
  return std::sqrt(Gamma1) *
         ((zeta1 + zeta2) * std::exp(0.5 * g * t) + (zeta1 - zeta2) * std::exp(-0.5 * g * t)) /
         (2.0 * std::sinh(0.5 * g * T));
}

inline double filter_renormalized_teleport(double t, double zeta1, double Gamma1, double T) {
  const double g = 2.0 * zeta1 * Gamma1;
  return zeta1 * std::sqrt(Gamma1) * std::exp(-0.5 * g * t) / std::sinh(0.5 * g * T);
}

inline double filter_renormalized_direct(double t, double zeta1, double Gamma1, double T) {
  const double g = 2.0 * zeta1 * Gamma1;
  return zeta1 * std::sqrt(Gamma1) * std::exp(0.5 * g * (T - t)) / std::sinh(0.5 * g * T);
}

inline double error_teleport(double zeta1, double Gamma1T) {
  return zeta1 / (1.0 - std::exp(-2.0 * zeta1 * Gamma1T));
}

inline double error_direct(double zeta1, double Gamma1T) {
  return zeta1 / (std::exp(2.0 * zeta1 * Gamma1T) - 1.0);
}

inline double error_parallel(double zeta1, double Gamma1T) {
  return 2.0 / (1.0 + zeta1 * zeta1) * error_teleport(zeta1, Gamma1T);
}

inline double gamma1_unconditional(double t, double zeta1, double Gamma2, double T) {
  const double a = std::sinh(zeta1 * Gamma2 * t), b = std::sinh(zeta1 * Gamma2 * T);
  return Gamma2 * a * a / (b * b - a * a);
}

inline double gamma1_jahne(double t, double Gamma2, double T) {
  return Gamma2 / std::expm1(2.0 * Gamma2 * (T - t));
}

// Composite Simpson rule with n (even) intervals.
template <class F>
double simpson(F f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double rel(double x, double ref) { return std::abs(x / ref - 1.0); }

}  // namespace oracle
