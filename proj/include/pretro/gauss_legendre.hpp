#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace pretro {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  Eigen::ArrayXd x;
  Eigen::ArrayXd w;
};

inline constexpr int kMaxGaussOrder = 64;

// Cached; 1 <= n <= kMaxGaussOrder.
const GaussRule& gauss_legendre(int n);

// Integral of f over [a, b] by recursive bisection with a 15-point rule,
// accepted when the halves agree to `tol` (relative to max(1, |I|)).
template <class F>
double adaptive_gauss(const F& f, double a, double b, double tol = 1e-13,
                      int depth = 40);

namespace detail {
template <class F>
double gauss_on(const F& f, double a, double b, const GaussRule& rule) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.x.size(); ++i) s += rule.w[i] * f(c + h * rule.x[i]);
  return s * h;
}

template <class F>
double adaptive_step(const F& f, double a, double b, double whole, double tol,
                     int depth, const GaussRule& rule) {
  const double m = 0.5 * (a + b);
  const double left = gauss_on(f, a, m, rule);
  const double right = gauss_on(f, m, b, rule);
  const double sum = left + right;
  if (depth <= 0 || std::abs(sum - whole) <= tol * std::max(1.0, std::abs(sum)))
    return sum;
  return adaptive_step(f, a, m, left, tol, depth - 1, rule) +
         adaptive_step(f, m, b, right, tol, depth - 1, rule);
}
}  // namespace detail

template <class F>
double adaptive_gauss(const F& f, double a, double b, double tol, int depth) {
  if (a == b) return 0.0;
  const GaussRule& rule = gauss_legendre(15);
  return detail::adaptive_step(f, a, b, detail::gauss_on(f, a, b, rule), tol, depth,
                               rule);
}

}  // namespace pretro
