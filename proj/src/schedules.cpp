#include "pretro/schedules.hpp"

#include <cmath>
#include <string>

#include "pretro/errors.hpp"
#include "pretro/gauss_legendre.hpp"
#include "pretro/special.hpp"

namespace pretro {

using special::sinhc;
using special::tanhc;

namespace {

constexpr double kHuge = std::numeric_limits<double>::max();

double log_sinhc(double x) {
  x = std::abs(x);
  if (x < 20.0) return std::log(sinhc(x));
  return x - std::log(2.0 * x) + std::log1p(-std::exp(-2.0 * x));
}

// sinh^2(k u) / (sinh^2(k T) - sinh^2(k u)) in a form that is regular at k = 0
// and keeps relative accuracy as u -> T; c = T - u is passed separately.
double sinh_ratio(double u, double c, double k, double T) {
  if (u <= 0.0) return 0.0;
  if (c <= 0.0) return std::numeric_limits<double>::infinity();
  const double num = u * u * std::exp(2.0 * log_sinhc(k * u));
  const double den =
      (T + u) * c * std::exp(log_sinhc(k * (T + u)) + log_sinhc(k * c));
  return num / den;
}

// Antiderivative of sinh_ratio in u, zero at u = 0:
//   -u + tanh(kT)/(2k) ln(sinh(k(T+u)) / sinh(k(T-u))).
double sinh_ratio_integral(double u, double c, double k, double T) {
  const double log_ratio =
      std::log((T + u) / c) + log_sinhc(k * (T + u)) - log_sinhc(k * c);
  return -u + 0.5 * T * tanhc(k * T) * log_ratio;
}

void check_zeta(double zeta) {
  if (!(std::abs(zeta) <= 1.0)) throw DomainError("|zeta| must be <= 1");
}

void check_rate_horizon(double Gamma, double T) {
  if (!(Gamma >= 0.0)) throw DomainError("rate must be >= 0");
  if (!(T > 0.0)) throw DomainError("horizon T must be > 0");
}

}  // namespace

std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::optimal_teleport: return "optimal_teleport";
    case ScheduleKind::optimal_direct: return "optimal_direct";
    case ScheduleKind::unconditional: return "unconditional";
    case ScheduleKind::jahne: return "jahne";
    case ScheduleKind::truncated: return "truncated";
    case ScheduleKind::custom: return "custom";
  }
  return "?";
}

RateSchedule RateSchedule::constant(double Gamma, double T) {
  check_rate_horizon(Gamma, T);
  RateSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.T_ = T;
  s.ref_ = Gamma;
  return s;
}

RateSchedule RateSchedule::optimal_teleport(double zeta1, double Gamma1, double T) {
  check_zeta(zeta1);
  check_rate_horizon(Gamma1, T);
  RateSchedule s;
  s.kind_ = ScheduleKind::optimal_teleport;
  s.T_ = T;
  s.ref_ = Gamma1;
  s.k_ = zeta1 * Gamma1;
  return s;
}

RateSchedule RateSchedule::optimal_direct(double zeta1, double Gamma1, double T) {
  RateSchedule s = optimal_teleport(zeta1, Gamma1, T);
  s.kind_ = ScheduleKind::optimal_direct;
  s.mirrored_ = true;
  return s;
}

RateSchedule RateSchedule::unconditional(double zeta1, double Gamma2, double T) {
  RateSchedule s = optimal_teleport(zeta1, Gamma2, T);
  s.kind_ = ScheduleKind::unconditional;
  s.k_ = zeta1 * Gamma2;
  return s;
}

RateSchedule RateSchedule::jahne(double Gamma2, double T) {
  check_rate_horizon(Gamma2, T);
  RateSchedule s;
  s.kind_ = ScheduleKind::jahne;
  s.T_ = T;
  s.ref_ = Gamma2;
  return s;
}

RateSchedule RateSchedule::truncated(Direction direction, double alpha, double Gamma1,
                                     double T, double r_max) {
  if (!(r_max > 0.0)) throw DomainError("r_max must be > 0");
  check_rate_horizon(Gamma1, T);
  RateSchedule s;
  s.kind_ = ScheduleKind::truncated;
  s.T_ = T;
  s.ref_ = Gamma1;
  s.k_ = alpha * Gamma1;
  s.mirrored_ = direction == Direction::direct_1_to_2;
  RateSchedule capped = s.with_cap(r_max * Gamma1);
  capped.kind_ = ScheduleKind::truncated;
  return capped;
}

RateSchedule RateSchedule::custom(std::function<double(double)> rate, double T) {
  if (!(T > 0.0)) throw DomainError("horizon T must be > 0");
  RateSchedule s;
  s.kind_ = ScheduleKind::custom;
  s.T_ = T;
  s.fn_ = std::move(rate);
  return s;
}

RateSchedule RateSchedule::with_cap(double cap) const {
  if (!(cap > 0.0)) throw DomainError("cap must be > 0");
  RateSchedule s = *this;
  s.cap_ = cap;
  s.crossing_.reset();
  const SingularEnd end = raw_singular_end();
  if (end == SingularEnd::none) return s;
  // The sinh family and the Jahne rate are monotone, so bisection finds the
  // unique crossing.
  const bool rising = end == SingularEnd::end;
  double lo = 0.0, hi = T_;
  if (rising ? raw(0.0) >= cap : raw(T_) >= cap) {
    s.crossing_ = rising ? 0.0 : T_;
    return s;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-16 * T_; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool above = raw(mid) >= cap;
    if (above == rising)
      hi = mid;
    else
      lo = mid;
  }
  s.crossing_ = 0.5 * (lo + hi);
  return s;
}

SingularEnd RateSchedule::raw_singular_end() const {
  switch (kind_) {
    case ScheduleKind::constant:
    case ScheduleKind::custom:
      return SingularEnd::none;
    case ScheduleKind::jahne:
      return SingularEnd::end;
    default:
      if (ref_ == 0.0) return SingularEnd::none;
      return mirrored_ ? SingularEnd::start : SingularEnd::end;
  }
}

SingularEnd RateSchedule::singular_end() const {
  return cap_ ? SingularEnd::none : raw_singular_end();
}

std::vector<double> RateSchedule::breakpoints() const {
  if (crossing_ && *crossing_ > 0.0 && *crossing_ < T_) return {*crossing_};
  return {};
}

double RateSchedule::raw(const Instant& at) const {
  switch (kind_) {
    case ScheduleKind::constant:
      return ref_;
    case ScheduleKind::custom:
      return fn_(at.t);
    case ScheduleKind::jahne: {
      const double u = at.rem;
      if (u <= 0.0) return std::numeric_limits<double>::infinity();
      return special::x_over_expm1(2.0 * ref_ * u) / (2.0 * u);
    }
    default: {
      if (ref_ == 0.0) return 0.0;
      if (mirrored_) return ref_ * sinh_ratio(at.rem, at.t, k_, T_);
      return ref_ * sinh_ratio(at.t, at.rem, k_, T_);
    }
  }
}

RateSample RateSchedule::sample(const Instant& at) const {
  double v = raw(at);
  if (cap_) {
    if (v >= *cap_) return {*cap_, true};
    return {v, false};
  }
  if (!std::isfinite(v)) return {kHuge, true};
  return {v, false};
}

double RateSchedule::antiderivative(const Instant& at) const {
  switch (kind_) {
    case ScheduleKind::constant:
      return ref_ * at.t;
    case ScheduleKind::jahne: {
      const double u = at.rem;
      const double x = 2.0 * ref_ * u;
      return -0.5 * (std::log(2.0 * u) -
                     std::log(special::x_over_one_minus_exp_neg(x)));
    }
    case ScheduleKind::custom:
      return adaptive_integral(0.0, at.t);
    default:
      if (ref_ == 0.0) return 0.0;
      if (mirrored_) return -ref_ * sinh_ratio_integral(at.rem, at.t, k_, T_);
      return ref_ * sinh_ratio_integral(at.t, at.rem, k_, T_);
  }
}

double RateSchedule::capped_antiderivative(const Instant& at) const {
  const double ts = *crossing_;
  const Instant cross = instant(ts, T_);
  if (raw_singular_end() == SingularEnd::end) {
    if (at.t <= ts) return antiderivative(at);
    return antiderivative(cross) + *cap_ * (at.t - ts);
  }
  if (at.t <= ts) return *cap_ * at.t;
  return *cap_ * ts + antiderivative(at) - antiderivative(cross);
}

double RateSchedule::adaptive_integral(double a, double b) const {
  auto f = [this](double t) {
    const double v = fn_(t);
    return cap_ ? std::min(v, *cap_) : v;
  };
  return adaptive_gauss(f, a, b, 1e-14);
}

double RateSchedule::integral(const Instant& a, const Instant& b) const {
  // Near T only the remainders separate two instants.
  const bool near_end = a.t > 0.5 * T_ && b.t > 0.5 * T_;
  if (near_end ? a.rem == b.rem : a.t == b.t) return 0.0;
  if (near_end ? b.rem > a.rem : b.t < a.t) return -integral(b, a);
  if (kind_ == ScheduleKind::custom) return adaptive_integral(a.t, b.t);
  if (kind_ == ScheduleKind::constant)
    return (cap_ ? std::min(ref_, *cap_) : ref_) * (near_end ? a.rem - b.rem : b.t - a.t);
  if (cap_) {
    if (!crossing_) return antiderivative(b) - antiderivative(a);
    return capped_antiderivative(b) - capped_antiderivative(a);
  }
  const SingularEnd end = raw_singular_end();
  if (end == SingularEnd::end && b.rem <= 0.0)
    throw SingularityError(std::string(to_string(kind_)) +
                           " schedule diverges at t = T");
  if (end == SingularEnd::start && a.t <= 0.0)
    throw SingularityError(std::string(to_string(kind_)) +
                           " schedule diverges at t = 0");
  return antiderivative(b) - antiderivative(a);
}

double interaction_time(const RateSchedule& schedule, double zeta, double t) {
  if (t < 0.0 || t > schedule.horizon()) throw DomainError("t outside [0, T]");
  return 2.0 * zeta * schedule.integral(0.0, t);
}

RateSample gamma2_teleport(double t, double zeta1, double Gamma1, double T) {
  return RateSchedule::optimal_teleport(zeta1, Gamma1, T).sample(t);
}

RateSample gamma2_direct(double t, double zeta1, double Gamma1, double T) {
  return RateSchedule::optimal_direct(zeta1, Gamma1, T).sample(t);
}

RateSample gamma1_unconditional(double t, double zeta1, double Gamma2, double T) {
  return RateSchedule::unconditional(zeta1, Gamma2, T).sample(t);
}

RateSample gamma1_jahne(double t, double Gamma2, double T) {
  return RateSchedule::jahne(Gamma2, T).sample(t);
}

// --- filters -----------------------------------------------------------------

double filter_renormalized(double t, double zeta1, double Gamma1, double T,
                           Direction direction) {
  check_zeta(zeta1);
  if (!(Gamma1 * T > 0.0)) throw DomainError("filter needs Gamma1 T > 0");
  const double k = zeta1 * Gamma1;
  const double u = direction == Direction::teleport_2_to_1 ? -t : T - t;
  return std::sqrt(Gamma1) * std::exp(k * u) / (Gamma1 * T * sinhc(k * T));
}

double filter_raw(double t, double zeta1, double zeta2, double Gamma1, double T,
                  Direction direction) {
  check_zeta(zeta1);
  check_zeta(zeta2);
  if (!(Gamma1 * T > 0.0)) throw DomainError("filter needs Gamma1 T > 0");
  const double k = zeta1 * Gamma1;
  // f = sqrt(G1) [zeta1 cosh(k s) + zeta2 sinh(k s)] / sinh(k T), s = t or t - T
  const double s = direction == Direction::teleport_2_to_1 ? t : t - T;
  const double denom = sinhc(k * T);
  return std::sqrt(Gamma1) * (std::cosh(k * s) / (Gamma1 * T * denom) +
                              zeta2 * (s / T) * sinhc(k * s) / denom);
}

FilterSpec FilterSpec::raw(Direction direction, double zeta1, double zeta2,
                           double Gamma1, double T) {
  FilterSpec f;
  f.kind_ = FilterKind::raw;
  f.direction_ = direction;
  f.zeta1_ = zeta1;
  f.zeta2_ = zeta2;
  f.Gamma1_ = Gamma1;
  f.T_ = T;
  (void)filter_raw(0.0, zeta1, zeta2, Gamma1, T, direction);  // validates
  return f;
}

FilterSpec FilterSpec::renormalized(Direction direction, double zeta1, double Gamma1,
                                    double T) {
  FilterSpec f;
  f.kind_ = FilterKind::renormalized;
  f.direction_ = direction;
  f.zeta1_ = zeta1;
  f.Gamma1_ = Gamma1;
  f.T_ = T;
  (void)filter_renormalized(0.0, zeta1, Gamma1, T, direction);
  return f;
}

FilterSpec FilterSpec::custom(std::function<double(double)> fn) {
  return custom(TimeFunction([fn = std::move(fn)](const Instant& at) { return fn(at.t); }),
                1.0);
}

FilterSpec FilterSpec::custom(TimeFunction fn, double T) {
  FilterSpec f;
  f.kind_ = FilterKind::custom;
  f.T_ = T;
  f.fn_ = std::move(fn);
  return f;
}

double FilterSpec::operator()(const Instant& at) const {
  switch (kind_) {
    case FilterKind::raw:
      return scale_ * filter_raw(at.t, zeta1_, zeta2_, Gamma1_, T_, direction_);
    case FilterKind::renormalized:
      return scale_ * filter_renormalized(at.t, zeta1_, Gamma1_, T_, direction_);
    case FilterKind::custom:
      return scale_ * fn_(at);
  }
  return 0.0;
}

FilterSpec FilterSpec::scaled(double factor) const {
  FilterSpec f = *this;
  f.scale_ *= factor;
  return f;
}

Eigen::ArrayXd filter_parallel_g(const Eigen::ArrayXd& B1, const Eigen::ArrayXd& B2,
                                 double zeta1) {
  const double z2 = zeta1 * zeta1;
  return 2.0 * zeta1 * (1.0 - z2) / (1.0 + z2) * 0.5 * (B1 + B2);
}

double filter_parallel_g_optimal(double t, double zeta1, double Gamma1, double T) {
  check_zeta(zeta1);
  if (!(Gamma1 * T > 0.0)) throw DomainError("filter needs Gamma1 T > 0");
  const double k = zeta1 * Gamma1;
  const double z2 = zeta1 * zeta1;
  return (1.0 - z2) / (1.0 + z2) * std::sqrt(Gamma1) * std::exp(k * t) /
         (Gamma1 * T * sinhc(k * T));
}

// --- closed-form errors ------------------------------------------------------

double min_error(Direction direction, Topology topology, double zeta1, double Gamma1T,
                 double n_in) {
  check_zeta(zeta1);
  if (!(Gamma1T >= 0.0)) throw DomainError("Gamma1 T must be >= 0");
  if (!(n_in >= 0.0)) throw DomainError("thermal occupancy must be >= 0");
  if (topology == Topology::parallel && direction != Direction::teleport_2_to_1)
    throw DomainError("parallel topology only supports teleportation");
  if (Gamma1T == 0.0) return std::numeric_limits<double>::infinity();
  const double x = 2.0 * zeta1 * Gamma1T;
  double err = direction == Direction::teleport_2_to_1
                   ? special::x_over_one_minus_exp_neg(x)
                   : special::x_over_expm1(x);
  err /= 2.0 * Gamma1T;
  if (topology == Topology::parallel) err *= 2.0 / (1.0 + zeta1 * zeta1);
  return err * thermal_factor(n_in);
}

double min_error_limit(Direction direction, Topology topology, double zeta1,
                       double n_in) {
  check_zeta(zeta1);
  if (topology == Topology::parallel && direction != Direction::teleport_2_to_1)
    throw DomainError("parallel topology only supports teleportation");
  double err = 0.0;
  if (direction == Direction::teleport_2_to_1) {
    if (zeta1 > 0.0) err = zeta1;
    if (topology == Topology::parallel) err *= 2.0 / (1.0 + zeta1 * zeta1);
  } else if (zeta1 < 0.0) {
    err = -zeta1;
  }
  return err * thermal_factor(n_in);
}

}  // namespace pretro
