#include "pretro/unconditional.hpp"

#include <algorithm>
#include <cmath>

#include "pretro/errors.hpp"

namespace pretro {

UncondCoefficients uncond_coefficients(const RateSchedule& s1, const RateSchedule& s2,
                                       double zeta1, double zeta2,
                                       const QuadratureOptions& options) {
  if (!(std::abs(zeta1) <= 1.0) || !(std::abs(zeta2) <= 1.0))
    throw DomainError("|zeta| must be <= 1");
  const double T = s2.horizon();
  auto shared = std::make_shared<const Mesh>(mesh_for(s1, s2, options));
  const Mesh& mesh = *shared;
  const Instant end{T, 0.0};

  // exp([tau2(t) - tau2(T)]/2), evaluated from the tail integral of Gamma2.
  auto decay2 = [&](const Instant& at) { return std::exp(-zeta2 * s2.integral(at, end)); };
  TimeFunction source = [&](const Instant& at) {
    return decay2(at) * std::sqrt(s1(at) * s2(at));
  };
  DampingIntegral rho1 = [&](const Instant& a, const Instant& b) {
    return 2.0 * zeta1 * s1.integral(a, b);
  };
  // D(t) = int_t^T source(t') exp(-[tau1(t') - tau1(t)]/2) dt'
  const Eigen::ArrayXd D = running_backward(mesh, source, rho1);

  const Eigen::Index n = mesh.size();
  UncondCoefficients c;
  c.mesh = shared;
  c.t = mesh.nodes();
  c.w = mesh.weights();
  c.C1.resize(n);
  c.C2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Instant at = mesh.node(i);
    c.C1[i] = (zeta1 + zeta2) * std::sqrt(s1(at)) * D[i + 1];
    c.C2[i] = decay2(at) * std::sqrt(s2(at));
  }
  c.K1 = (zeta1 + zeta2) * D[0];
  c.K2 = decay2({0.0, T});
  c.int_C1_sq = mesh.integrate(c.C1.square());
  c.int_C2_sq = mesh.integrate(c.C2.square());
  c.int_C1C2 = mesh.integrate(c.C1 * c.C2);
  return c;
}

UncondReport uncond_error(const UncondCoefficients& c, double zeta1, double zeta2,
                          double n_in, double nbar1, double nbar2) {
  if (n_in < 0.0 || nbar1 < 0.0 || nbar2 < 0.0)
    throw DomainError("occupancies must be non-negative");
  UncondReport r;
  r.K1 = c.K1;
  r.K2 = c.K2;
  double optical;
  if (zeta1 != 0.0 && zeta2 != 0.0) {
    optical = (1.0 + zeta2 * zeta2) / (4.0 * zeta2) * (1.0 - c.K2 * c.K2) -
              (1.0 + zeta1 * zeta1) / (4.0 * zeta1) * c.K1 * c.K1 +
              (1.0 - zeta1 * zeta1) * (zeta2 - zeta1) / (2.0 * zeta1) * c.int_C1C2;
  } else {
    optical = 0.5 * (1.0 + zeta2 * zeta2) * c.int_C2_sq +
              0.5 * (1.0 + zeta1 * zeta1) * c.int_C1_sq - (1.0 + zeta1 * zeta2) * c.int_C1C2;
  }
  r.err_optical = thermal_factor(n_in) * optical;
  r.err_b1 = 0.5 * (1.0 - c.K1) * (1.0 - c.K1) * (2.0 * nbar1 + 1.0);
  r.err_b2 = 0.5 * c.K2 * c.K2 * (2.0 * nbar2 + 1.0);
  r.err_total = r.err_optical + r.err_b1 + r.err_b2;
  r.F_uc = fidelity_from_error(r.err_total);
  return r;
}

double UncondResiduals::max() const { return std::max({retention, cross, commutator}); }

namespace {
double relative(double lhs, double rhs, double scale) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), scale, 1e-300});
}
}  // namespace

UncondResiduals uncond_identities(const UncondCoefficients& c, double zeta1, double zeta2) {
  const double K1sq = c.K1 * c.K1, K2sq = c.K2 * c.K2;
  const double a = 2.0 * zeta2 * c.int_C2_sq;
  const double b = 2.0 * zeta1 * c.int_C1_sq;
  const double x = 2.0 * (zeta1 + zeta2) * c.int_C1C2;
  UncondResiduals r;
  r.retention = relative(K2sq + a, 1.0, std::max(K2sq, std::abs(a)));
  r.cross = relative(b, x - K1sq, std::max(std::abs(x), K1sq));
  r.commutator = relative(K1sq + K2sq + a + b - x, 1.0,
                          std::max({K1sq, K2sq, std::abs(a), std::abs(b), std::abs(x)}));
  return r;
}

UncondReport uncond_protocol(double zeta1, double zeta2, double Gamma2, double T,
                             UncondSchedule schedule, double n_in,
                             const QuadratureOptions& options) {
  const RateSchedule s1 = schedule == UncondSchedule::jahne
                              ? RateSchedule::jahne(Gamma2, T)
                              : RateSchedule::unconditional(zeta1, Gamma2, T);
  const RateSchedule s2 = RateSchedule::constant(Gamma2, T);
  return uncond_error(uncond_coefficients(s1, s2, zeta1, zeta2, options), zeta1, zeta2, n_in);
}

}  // namespace pretro
