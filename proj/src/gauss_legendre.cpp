#include "pretro/gauss_legendre.hpp"

#include <array>
#include <cmath>

#include "pretro/errors.hpp"

namespace pretro {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// Legendre recurrence, weights twice the squared first eigenvector components.
GaussRule build_rule(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule rule;
  rule.x = es.eigenvalues().array();
  rule.w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  // Symmetrize to remove eigensolver round-off.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.x[n - 1 - i] - rule.x[i]);
    const double w = 0.5 * (rule.w[n - 1 - i] + rule.w[i]);
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    rule.w[i] = rule.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.x[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const std::array<GaussRule, kMaxGaussOrder + 1> rules = [] {
    std::array<GaussRule, kMaxGaussOrder + 1> r;
    for (int k = 1; k <= kMaxGaussOrder; ++k) r[k] = build_rule(k);
    return r;
  }();
  if (n < 1 || n > kMaxGaussOrder) throw DomainError("Gauss order out of range");
  return rules[n];
}

}  // namespace pretro
