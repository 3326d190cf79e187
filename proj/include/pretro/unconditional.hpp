#pragma once

#include <Eigen/Dense>
#include <memory>

#include "pretro/quadrature.hpp"
#include "pretro/schedules.hpp"

namespace pretro {

// Open-loop direct transfer 1 -> 2. With the record discarded,
//   b2(T) = K2 b2(0) - K1 b1(0) - i int C2 u^{zeta2} + i int C1 u^{zeta1},
// and the transfer error is b2(T) + b1(0) (the sign of b1(0) is a convention).
struct UncondCoefficients {
  std::shared_ptr<const Mesh> mesh;
  Eigen::ArrayXd t, w;
  Eigen::ArrayXd C1, C2;  // field mode functions at the mesh nodes
  double K1 = 0.0;        // transfer of -b1(0)
  double K2 = 0.0;        // retention of b2(0)
  double int_C1_sq = 0.0, int_C2_sq = 0.0, int_C1C2 = 0.0;
};

UncondCoefficients uncond_coefficients(const RateSchedule& s1, const RateSchedule& s2,
                                       double zeta1, double zeta2,
                                       const QuadratureOptions& options = {});

struct UncondReport {
  double K1 = 0.0, K2 = 0.0;
  double err_optical = 0.0;
  double err_b1 = 0.0, err_b2 = 0.0;
  double err_total = 0.0;
  double F_uc = 0.0;
  // Transferred operator is -b1(0); always true, carried for output files.
  bool minus_b1_convention = true;
};

// Single-quadrature error variances. nbar1, nbar2 are the initial thermal
// occupancies of the two oscillators (vacuum by default).
UncondReport uncond_error(const UncondCoefficients& c, double zeta1, double zeta2,
                          double n_in = 0.0, double nbar1 = 0.0, double nbar2 = 0.0);

// Residuals of the commutator-conservation identities, each written without
// division by zeta:
//   K2^2 + 2 zeta2 int C2^2 = 1
//   2 zeta1 int C1^2 = 2 (zeta1 + zeta2) int C1 C2 - K1^2
// and of the full commutator [b2(T), b2(T)^dag] = 1.
struct UncondResiduals {
  double retention = 0.0;
  double cross = 0.0;
  double commutator = 0.0;
  double max() const;
};

UncondResiduals uncond_identities(const UncondCoefficients& c, double zeta1, double zeta2);

// Reference configuration: Gamma2 constant, Gamma1(t) on the unconditional
// (or cavity-catching) schedule.
enum class UncondSchedule { unconditional, jahne };

UncondReport uncond_protocol(double zeta1, double zeta2, double Gamma2, double T,
                             UncondSchedule schedule = UncondSchedule::unconditional,
                             double n_in = 0.0, const QuadratureOptions& options = {});

}  // namespace pretro
