#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "pretro/model.hpp"

namespace pretro {

enum class ScheduleKind {
  constant,
  optimal_teleport,  // Gamma2(t) that equalizes the noise modes, diverges at T
  optimal_direct,    // mirror image of optimal_teleport, diverges at 0
  unconditional,     // Gamma1(t) with Gamma2 held constant, diverges at T
  jahne,             // cavity-catching rate, diverges at T
  truncated,         // optimal shape with a retuned exponent, capped
  custom,            // arbitrary rate function, integrated adaptively
};

std::string_view to_string(ScheduleKind k);

enum class SingularEnd { none, start, end };

// A rate evaluated at one time. At a divergence the value is the cap (or the
// largest finite double when uncapped) and `saturated` is set; callers decide
// how to treat it.
struct RateSample {
  double value = 0.0;
  bool saturated = false;
};

// Time-dependent measurement rate Gamma(t) on [0, T]. Immutable value type.
//
// The closed-form kinds all belong to one family,
//   Gamma(t) = ref * sinh^2(k t) / (sinh^2(k T) - sinh^2(k t)),
// (mirrored t -> T - t for the direct kind), whose antiderivative is known in
// closed form, so integrals never go through quadrature.
class RateSchedule {
 public:
  static RateSchedule constant(double Gamma, double T);
  // Gamma2(t) for teleportation; Gamma1 constant.
  static RateSchedule optimal_teleport(double zeta1, double Gamma1, double T);
  // Gamma2(t) for conditional direct transfer; Gamma1 constant.
  static RateSchedule optimal_direct(double zeta1, double Gamma1, double T);
  // Gamma1(t) for unconditional direct transfer; Gamma2 constant.
  static RateSchedule unconditional(double zeta1, double Gamma2, double T);
  static RateSchedule jahne(double Gamma2, double T);
  // Optimal shape with zeta1 replaced by `alpha`, capped at r_max * Gamma1.
  static RateSchedule truncated(Direction direction, double alpha, double Gamma1,
                                double T, double r_max);
  static RateSchedule custom(std::function<double(double)> rate, double T);

  // Same schedule composed with min(., cap).
  RateSchedule with_cap(double cap) const;

  ScheduleKind kind() const { return kind_; }
  double horizon() const { return T_; }
  double reference_rate() const { return ref_; }
  // Argument coefficient k of the sinh family (zeta1*Gamma1, alpha*Gamma1 or
  // zeta1*Gamma2); zero for the other kinds.
  double exponent() const { return k_; }
  std::optional<double> cap() const { return cap_; }

  RateSample sample(const Instant& at) const;
  RateSample sample(double t) const { return sample(instant(t, T_)); }
  // Rate value; at a saturated point this is the cap or the largest double.
  double operator()(double t) const { return sample(t).value; }
  double operator()(const Instant& at) const { return sample(at).value; }

  // Integral of Gamma over [a, b] (a <= b). Throws SingularityError when an
  // uncapped divergence lies in [a, b].
  double integral(const Instant& a, const Instant& b) const;
  double integral(double a, double b) const {
    return integral(instant(a, T_), instant(b, T_));
  }

  SingularEnd singular_end() const;
  // End where the uncapped rate diverges; with a cap the rate is finite but
  // still steep there.
  SingularEnd steep_end() const { return raw_singular_end(); }
  // Interior points where the schedule has a kink (cap crossings).
  std::vector<double> breakpoints() const;

 private:
  RateSchedule() = default;

  double raw(const Instant& at) const;  // uncapped rate, may be +inf
  double raw(double t) const { return raw(instant(t, T_)); }
  double antiderivative(const Instant& at) const;  // uncapped, singular point excluded
  double capped_antiderivative(const Instant& at) const;
  double adaptive_integral(double a, double b) const;
  SingularEnd raw_singular_end() const;

  ScheduleKind kind_ = ScheduleKind::constant;
  double T_ = 1.0;
  double ref_ = 0.0;
  double k_ = 0.0;
  bool mirrored_ = false;
  std::optional<double> cap_;
  std::optional<double> crossing_;  // where the uncapped rate meets the cap
  std::function<double(double)> fn_;
};

// tau(t) = 2 zeta int_0^t Gamma. Throws SingularityError across a divergence.
double interaction_time(const RateSchedule& schedule, double zeta, double t);

// --- closed-form rate schedules --------------------------------------------

// Gamma2(t) that makes teleportation optimal.
RateSample gamma2_teleport(double t, double zeta1, double Gamma1, double T);
RateSample gamma2_direct(double t, double zeta1, double Gamma1, double T);
// Gamma1(t) for unconditional direct transfer at constant Gamma2.
RateSample gamma1_unconditional(double t, double zeta1, double Gamma2, double T);
RateSample gamma1_jahne(double t, double Gamma2, double T);

// --- filters -----------------------------------------------------------------

enum class FilterKind { raw, renormalized, custom };

// Filter amplitude f(t) (units sqrt(rate)). `raw` acts on the bare homodyne
// record, `renormalized` on the record with the oscillator-2 displacement
// removed; both integrate to the same outcome for the optimal schedule.
class FilterSpec {
 public:
  static FilterSpec raw(Direction direction, double zeta1, double zeta2,
                        double Gamma1, double T);
  static FilterSpec renormalized(Direction direction, double zeta1,
                                 double Gamma1, double T);
  static FilterSpec custom(std::function<double(double)> f);
  // Filter on [0, T] whose evaluation needs T - t to full precision.
  static FilterSpec custom(TimeFunction f, double T);

  FilterKind kind() const { return kind_; }
  double operator()(const Instant& at) const;
  double operator()(double t) const { return (*this)(instant(t, T_)); }
  FilterSpec scaled(double factor) const;

 private:
  FilterSpec() = default;

  FilterKind kind_ = FilterKind::custom;
  Direction direction_ = Direction::teleport_2_to_1;
  double zeta1_ = 0.0, zeta2_ = 0.0, Gamma1_ = 0.0, T_ = 1.0;
  double scale_ = 1.0;
  TimeFunction fn_;
};

double filter_raw(double t, double zeta1, double zeta2, double Gamma1, double T,
                  Direction direction);
double filter_renormalized(double t, double zeta1, double Gamma1, double T,
                           Direction direction);

// Optimal auxiliary filter for the second parallel record, pointwise from the
// noise modes: g = 2 zeta1 (1 - zeta1^2)/(1 + zeta1^2) (B1 + B2)/2.
Eigen::ArrayXd filter_parallel_g(const Eigen::ArrayXd& B1,
                                 const Eigen::ArrayXd& B2, double zeta1);

// The same optimum in closed form for the optimal teleport protocol, where
// B1 = B2 = sqrt(G1) exp(zeta1 G1 t) / (2 sinh(zeta1 G1 T)).
double filter_parallel_g_optimal(double t, double zeta1, double Gamma1, double T);

// --- closed-form errors ------------------------------------------------------

// Minimum single-quadrature error of the optimal conditional protocol.
// Sequential teleport: zeta1/(1 - exp(-gamma1 T)); parallel: times
// 2/(1 + zeta1^2); direct: zeta1/(exp(gamma1 T) - 1). All scale with
// (2 n_in + 1). Returns +inf at zero strength when the limit diverges.
double min_error(Direction direction, Topology topology, double zeta1,
                 double Gamma1T, double n_in = 0.0);

// Error in the infinite-strength limit.
double min_error_limit(Direction direction, Topology topology, double zeta1,
                       double n_in = 0.0);

inline double fidelity_from_error(double err) { return 1.0 / (1.0 + err); }

}  // namespace pretro
