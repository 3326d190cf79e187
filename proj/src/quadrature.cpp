#include "pretro/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "pretro/errors.hpp"
#include "pretro/gauss_legendre.hpp"

namespace pretro {

namespace {

// Half the length of [s0, s1], taken from whichever representation (s or its
// complement) is exact on that side of the interval.
double half_width(double s0, double c0, double s1, double c1) {
  return s0 < 0.5 ? 0.5 * (s1 - s0) : 0.5 * (c0 - c1);
}

// Sum of the remaining terms of a geometric series whose last two computed
// terms are `prev` and `last`. Zero unless the terms shrink monotonically.
double geometric_tail(double prev, double last) {
  if (prev == 0.0) return 0.0;
  const double q = last / prev;
  if (!(q > 0.0 && q < 1.0)) return 0.0;
  return last * q / (1.0 - q);
}

// Tail for a running integral that must converge at a singular end.
double convergent_tail(double prev, double last) {
  if (prev != 0.0 && last / prev >= 1.0)
    throw SingularityError("integrand is not integrable at a singular end");
  return geometric_tail(prev, last);
}

}  // namespace

Mesh::Mesh(double T, bool singular_start, bool singular_end,
           std::vector<double> breakpoints, const QuadratureOptions& options)
    : T_(T),
      start_(singular_start),
      end_(singular_end),
      order_(options.order),
      ratio_(options.grading_ratio),
      step_order_(options.step_order) {
  if (!(T > 0.0)) throw DomainError("horizon T must be > 0");
  if (options.panels < 1 || options.order < 1 || options.step_order < 1)
    throw DomainError("mesh needs at least one panel and one node");
  if ((start_ || end_) && (options.grading_levels < 2 || !(options.grading_ratio > 0.0 &&
                                                             options.grading_ratio < 1.0)))
    throw DomainError("singular ends need >= 2 grading levels and a ratio in (0, 1)");

  // Panel edges as (s, 1 - s) pairs so graded edges keep their distance to
  // either end exactly.
  struct Edge {
    double s, c;
  };
  std::vector<Edge> edges;
  for (int i = 0; i <= options.panels; ++i) {
    const double s = static_cast<double>(i) / options.panels;
    edges.push_back({s, static_cast<double>(options.panels - i) / options.panels});
  }
  for (double tb : breakpoints) {
    if (!(tb > 0.0 && tb < T)) continue;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
      const double mid = 0.5 * (lo + hi);
      (map(mid, 1.0 - mid).t < tb ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    edges.push_back({s, 1.0 - s});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.s < y.s; });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& x, const Edge& y) { return y.s - x.s < 1e-14; }),
              edges.end());

  // Graded panels stop short of a singular end; the remainder is covered by
  // the geometric tail.
  if (end_) {
    double c = edges[edges.size() - 2].c;
    edges.pop_back();
    for (int i = 0; i < options.grading_levels; ++i) {
      c *= options.grading_ratio;
      edges.push_back({1.0 - c, c});
    }
    last_edge_ = c;
  }
  if (start_) {
    std::vector<Edge> head;
    double s = edges[1].s * std::pow(options.grading_ratio, options.grading_levels);
    for (int i = 0; i < options.grading_levels; ++i, s /= options.grading_ratio)
      head.push_back({s, 1.0 - s});
    edges.erase(edges.begin());
    edges.insert(edges.begin(), head.begin(), head.end());
    first_edge_ = head.front().s;
  }

  const GaussRule& rule = gauss_legendre(options.order);
  const Eigen::Index panels = static_cast<Eigen::Index>(edges.size()) - 1;
  const Eigen::Index n = panels * options.order;
  t_.resize(n);
  rem_.resize(n);
  w_.resize(n);
  sigma_.resize(n + 2);
  comp_.resize(n + 2);
  sigma_[0] = 0.0;
  comp_[0] = 1.0;
  Eigen::Index k = 0;
  for (Eigen::Index p = 0; p < panels; ++p) {
    const double h = half_width(edges[p].s, edges[p].c, edges[p + 1].s, edges[p + 1].c);
    const double sc = 0.5 * (edges[p].s + edges[p + 1].s);
    const double cc = 0.5 * (edges[p].c + edges[p + 1].c);
    for (int i = 0; i < options.order; ++i, ++k) {
      const double s = sc + h * rule.x[i], c = cc - h * rule.x[i];
      sigma_[k + 1] = s;
      comp_[k + 1] = c;
      const Instant at = map(s, c);
      t_[k] = at.t;
      rem_[k] = at.rem;
      w_[k] = h * rule.w[i] * jacobian(s, c);
    }
  }
  sigma_[n + 1] = 1.0;
  comp_[n + 1] = 0.0;
}

Instant Mesh::map(double s, double c) const {
  if (start_ && end_) return {T_ * s * s * (3.0 - 2.0 * s), T_ * c * c * (3.0 - 2.0 * c)};
  if (start_) return {T_ * s * s, T_ * c * (1.0 + s)};
  if (end_) return {T_ * s * (1.0 + c), T_ * c * c};
  return {T_ * s, T_ * c};
}

double Mesh::jacobian(double s, double c) const {
  if (start_ && end_) return 6.0 * T_ * s * c;
  if (start_) return 2.0 * T_ * s;
  if (end_) return 2.0 * T_ * c;
  return T_;
}

double Mesh::integrate(const Eigen::ArrayXd& values) const {
  const Eigen::ArrayXd terms = w_ * values;
  double sum = terms.sum();
  const Eigen::Index n = terms.size();
  if (end_ && n >= 2 * order_)
    sum += geometric_tail(terms.segment(n - 2 * order_, order_).sum(),
                          terms.tail(order_).sum());
  if (start_ && n >= 2 * order_)
    sum += geometric_tail(terms.segment(order_, order_).sum(), terms.head(order_).sum());
  return sum;
}

double Mesh::step_integral(Eigen::Index j, const TimeFunction& f) const {
  if (end_ && j == points() - 2) return to_end_integral(comp_[j], f);
  if (start_ && j == 0) return from_start_integral(sigma_[1], f);
  return panel_integral(sigma_[j], comp_[j], sigma_[j + 1], comp_[j + 1], f);
}

double Mesh::to_end_integral(double c, const TimeFunction& f) const {
  double sum = 0.0;
  if (c > last_edge_) {
    sum = panel_integral(1.0 - c, c, 1.0 - last_edge_, last_edge_, f);
    c = last_edge_;
  }
  const double r = ratio_;
  const double a = panel_integral(1.0 - c, c, 1.0 - c * r, c * r, f);
  const double b = panel_integral(1.0 - c * r, c * r, 1.0 - c * r * r, c * r * r, f);
  return sum + a + b + convergent_tail(a, b);
}

double Mesh::from_start_integral(double s, const TimeFunction& f) const {
  double sum = 0.0;
  if (s > first_edge_) {
    sum = panel_integral(first_edge_, 1.0 - first_edge_, s, 1.0 - s, f);
    s = first_edge_;
  }
  const double r = ratio_;
  const double a = panel_integral(s * r, 1.0 - s * r, s, 1.0 - s, f);
  const double b = panel_integral(s * r * r, 1.0 - s * r * r, s * r, 1.0 - s * r, f);
  return sum + a + b + convergent_tail(a, b);
}

std::pair<double, double> Mesh::coordinates(const Instant& at) const {
  if (start_ && end_) {
    // t = T s^2 (3 - 2 s) is symmetric under s <-> c, t <-> T - t.
    const bool lower = at.t <= at.rem;
    const double target = (lower ? at.t : at.rem) / T_;
    double lo = 0.0, hi = 0.5;
    double x = std::sqrt(target / 3.0);
    for (int i = 0; i < 100; ++i) {
      const double v = x * x * (3.0 - 2.0 * x);
      (v < target ? lo : hi) = x;
      const double dv = 6.0 * x * (1.0 - x);
      double next = dv > 0.0 ? x - (v - target) / dv : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == x) break;
      x = next;
    }
    return lower ? std::pair{x, 1.0 - x} : std::pair{1.0 - x, x};
  }
  if (start_) {
    const double s = std::sqrt(at.t / T_);
    return {s, at.rem / (T_ * (1.0 + s))};
  }
  if (end_) {
    const double c = std::sqrt(at.rem / T_);
    return {at.t / (T_ * (1.0 + c)), c};
  }
  return {at.t / T_, at.rem / T_};
}

Eigen::Index Mesh::locate(const Instant& at) const {
  // Compare by t in the lower half and by T - t in the upper half.
  auto before_or_at = [&](Eigen::Index j) {
    const Instant p = point(j);
    return at.t <= 0.5 * T_ ? p.t <= at.t : p.rem >= at.rem;
  };
  Eigen::Index lo = 0, hi = points() - 1;  // invariant: point(lo) <= at
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (before_or_at(mid) ? lo : hi) = mid;
  }
  return std::min(lo, points() - 2);
}

double Mesh::partial_step(Eigen::Index j, const Instant& at, bool to_next,
                          const TimeFunction& f) const {
  const auto [s, c] = coordinates(at);
  if (to_next) {
    if (end_ && j == points() - 2) return to_end_integral(c, f);
    return panel_integral(s, c, sigma_[j + 1], comp_[j + 1], f);
  }
  if (start_ && j == 0) return from_start_integral(s, f);
  return panel_integral(sigma_[j], comp_[j], s, c, f);
}

double Mesh::panel_integral(double s0, double c0, double s1, double c1,
                            const TimeFunction& f) const {
  const double h = half_width(s0, c0, s1, c1);
  if (h <= 0.0) return 0.0;
  const double sc = 0.5 * (s0 + s1);
  const double cc = 0.5 * (c0 + c1);
  const GaussRule& rule = gauss_legendre(step_order_);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.x.size(); ++i) {
    const double s = sc + h * rule.x[i], c = cc - h * rule.x[i];
    sum += rule.w[i] * jacobian(s, c) * f(map(s, c));
  }
  return h * sum;
}

Eigen::ArrayXd running_forward(const Mesh& mesh, const TimeFunction& g,
                               const DampingIntegral& rho) {
  const Eigen::Index np = mesh.points();
  Eigen::ArrayXd F = Eigen::ArrayXd::Zero(np);
  for (Eigen::Index j = 0; j + 1 < np; ++j) {
    const Instant end = mesh.point(j + 1);
    double carried = 0.0;
    if (F[j] != 0.0) carried = std::exp(0.5 * rho(mesh.point(j), end)) * F[j];
    F[j + 1] = carried + mesh.step_integral(j, [&](const Instant& tp) {
      return g(tp) * std::exp(0.5 * rho(tp, end));
    });
  }
  return F;
}

Eigen::ArrayXd running_backward(const Mesh& mesh, const TimeFunction& g,
                                const DampingIntegral& rho) {
  const Eigen::Index np = mesh.points();
  Eigen::ArrayXd G = Eigen::ArrayXd::Zero(np);
  for (Eigen::Index j = np - 2; j >= 0; --j) {
    const Instant start = mesh.point(j);
    double carried = 0.0;
    if (G[j + 1] != 0.0) carried = std::exp(-0.5 * rho(start, mesh.point(j + 1))) * G[j + 1];
    G[j] = carried + mesh.step_integral(j, [&](const Instant& tp) {
      return g(tp) * std::exp(-0.5 * rho(start, tp));
    });
  }
  return G;
}

Mesh mesh_for(const RateSchedule& s1, const RateSchedule& s2,
              const QuadratureOptions& options) {
  if (s1.horizon() != s2.horizon()) throw DomainError("schedules have different horizons");
  const bool start =
      s1.steep_end() == SingularEnd::start || s2.steep_end() == SingularEnd::start;
  const bool end = s1.steep_end() == SingularEnd::end || s2.steep_end() == SingularEnd::end;
  std::vector<double> breaks = s1.breakpoints();
  for (double b : s2.breakpoints()) breaks.push_back(b);
  return Mesh(s1.horizon(), start, end, breaks, options);
}

TransferProfile transfer_coefficients(const FilterSpec& filter, const RateSchedule& s1,
                                      const RateSchedule& s2, double zeta1,
                                      Direction direction,
                                      const QuadratureOptions& options) {
  if (!(std::abs(zeta1) <= 1.0)) throw DomainError("|zeta1| must be <= 1");
  auto shared = std::make_shared<const Mesh>(mesh_for(s1, s2, options));
  const Mesh& mesh = *shared;
  const Eigen::Index n = mesh.size();

  TimeFunction g1 = [&](const Instant& at) { return filter(at) * std::sqrt(s1(at)); };
  TimeFunction g2 = [&](const Instant& at) { return filter(at) * std::sqrt(s2(at)); };
  // gamma1 = 2 zeta1 Gamma1; renormalized gamma2 = -2 zeta1 Gamma2, which is
  // finite even when zeta2 = 0.
  DampingIntegral rho1 = [&](const Instant& a, const Instant& b) {
    return 2.0 * zeta1 * s1.integral(a, b);
  };
  DampingIntegral rho2 = [&](const Instant& a, const Instant& b) {
    return -2.0 * zeta1 * s2.integral(a, b);
  };

  Eigen::ArrayXd M1, M2;
  TransferProfile p;
  if (direction == Direction::teleport_2_to_1) {
    M1 = running_forward(mesh, g1, rho1);
    M2 = running_backward(mesh, g2, rho2);
    p.M1 = M1[M1.size() - 1];
    p.M2 = M2[0];
  } else {
    M1 = running_backward(mesh, g1, rho1);
    M2 = running_forward(mesh, g2, rho2);
    p.M1 = M1[0];
    p.M2 = M2[M2.size() - 1];
  }
  p.mesh = shared;
  p.t = mesh.nodes();
  p.w = mesh.weights();
  p.M1t = M1.segment(1, n);
  p.M2t = M2.segment(1, n);
  p.filter.resize(n);
  p.gamma1.resize(n);
  p.gamma2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.filter[i] = filter(mesh.node(i));
    p.gamma1[i] = s1(mesh.node(i));
    p.gamma2[i] = s2(mesh.node(i));
  }
  p.int_filter_sq = mesh.integrate(p.filter.square());
  return p;
}

FilterSpec renormalize_filter(const FilterSpec& raw, const RateSchedule& s2, double zeta1,
                              double zeta2, Direction direction,
                              const QuadratureOptions& options) {
  if (!(std::abs(zeta1) <= 1.0) || !(std::abs(zeta2) <= 1.0))
    throw DomainError("|zeta| must be <= 1");
  struct Profile {
    FilterSpec raw;
    RateSchedule s2;
    Mesh mesh;
    bool teleport;
    double coupling;
    TimeFunction g;
    DampingIntegral rho;
    Eigen::ArrayXd M2;
  };
  const bool teleport = direction == Direction::teleport_2_to_1;
  auto pr = std::make_shared<Profile>(Profile{raw, s2, mesh_for(s2, s2, options), teleport,
                                              (teleport ? -1.0 : 1.0) * (zeta1 + zeta2),
                                              {}, {}, {}});
  Profile* q = pr.get();
  // In the bare frame oscillator 2 is damped at its physical rate 2 zeta2 Gamma2.
  q->g = [q](const Instant& at) { return q->raw(at) * std::sqrt(q->s2(at)); };
  q->rho = [q, zeta2](const Instant& a, const Instant& b) {
    return 2.0 * zeta2 * q->s2.integral(a, b);
  };
  q->M2 = teleport ? running_backward(q->mesh, q->g, q->rho)
                   : running_forward(q->mesh, q->g, q->rho);

  TimeFunction renormalized = [pr](const Instant& at) {
    const Profile& p = *pr;
    const Eigen::Index j = p.mesh.locate(at);
    double m2 = 0.0;
    if (p.teleport) {
      const Instant next = p.mesh.point(j + 1);
      if (p.M2[j + 1] != 0.0) m2 = std::exp(-0.5 * p.rho(at, next)) * p.M2[j + 1];
      m2 += p.mesh.partial_step(j, at, true, [&](const Instant& tp) {
        return p.g(tp) * std::exp(-0.5 * p.rho(at, tp));
      });
    } else {
      const Instant prev = p.mesh.point(j);
      if (p.M2[j] != 0.0) m2 = std::exp(0.5 * p.rho(prev, at)) * p.M2[j];
      m2 += p.mesh.partial_step(j, at, false, [&](const Instant& tp) {
        return p.g(tp) * std::exp(0.5 * p.rho(tp, at));
      });
    }
    return p.raw(at) + p.coupling * std::sqrt(p.s2(at)) * m2;
  };
  return FilterSpec::custom(std::move(renormalized), s2.horizon());
}

NoiseModes noise_modes(const TransferProfile& p, double zeta1, Direction direction) {
  if (zeta1 == 0.0)
    throw UnsupportedParameter("noise modes are undefined at zeta1 = 0");
  const double sign = direction == Direction::teleport_2_to_1 ? 1.0 : -1.0;
  NoiseModes m;
  m.mesh = p.mesh;
  m.t = p.t;
  m.w = p.w;
  m.B1 = p.filter / (2.0 * zeta1) + sign * p.gamma1.sqrt() * p.M1t;
  m.B2 = p.filter / (2.0 * zeta1) + sign * p.gamma2.sqrt() * p.M2t;
  return m;
}

double error_variance_sequential(const NoiseModes& m, double zeta1, double n_in) {
  const double z2 = zeta1 * zeta1;
  const Mesh& mesh = *m.mesh;
  const double sum_sq = mesh.integrate(m.B1.square()) + mesh.integrate(m.B2.square());
  const double diff_sq = mesh.integrate((m.B1 - m.B2).square());
  return thermal_factor(n_in) * (z2 * sum_sq + 0.5 * (1.0 - z2) * diff_sq);
}

double error_variance_parallel(const NoiseModes& m, const Eigen::ArrayXd& g,
                               double zeta1, double n_in) {
  if (zeta1 == 0.0)
    throw UnsupportedParameter("parallel records are undefined at zeta1 = 0");
  const double z2 = zeta1 * zeta1;
  const double c = (1.0 - z2) / (1.0 + z2);
  const Eigen::ArrayXd h = g / (2.0 * zeta1);
  const Mesh& mesh = *m.mesh;
  const double sum_sq = mesh.integrate(m.B1.square()) + mesh.integrate(m.B2.square());
  const double aux =
      mesh.integrate((h - c * m.B1).square()) + mesh.integrate((h - c * m.B2).square());
  return thermal_factor(n_in) * (2.0 * z2 / (1.0 + z2) * sum_sq + 0.5 * (1.0 + z2) * aux);
}

namespace {
// |lhs - rhs| relative to the largest term entering the identity.
double relative(double lhs, double rhs, double scale) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), scale, 1e-300});
}
}  // namespace

IdentityResiduals verify_identities(const TransferProfile& p, const NoiseModes& m,
                                    double zeta1, Direction direction) {
  const double sign = direction == Direction::teleport_2_to_1 ? 1.0 : -1.0;
  const double f_term = p.int_filter_sq / (4.0 * zeta1 * zeta1);
  const double m1_term = p.M1 * p.M1 / (2.0 * zeta1);
  const double m2_term = p.M2 * p.M2 / (2.0 * zeta1);
  const double b1 = m.mesh->integrate(m.B1.square());
  const double b2 = m.mesh->integrate(m.B2.square());
  IdentityResiduals r;
  r.b1 = relative(b1, f_term + sign * m1_term, std::max(f_term, std::abs(m1_term)));
  r.b2 = relative(b2, f_term + sign * m2_term, std::max(f_term, std::abs(m2_term)));
  // Teleport: M1^2 = M2^2 + 2 zeta1 int (B1^2 - B2^2); direct swaps M1, M2.
  const double lhs = sign > 0 ? p.M1 * p.M1 : p.M2 * p.M2;
  const double rhs = (sign > 0 ? p.M2 * p.M2 : p.M1 * p.M1) + 2.0 * zeta1 * (b1 - b2);
  r.combined = relative(lhs, rhs, std::abs(2.0 * zeta1) * std::max(b1, b2));
  return r;
}

TransferReport evaluate_protocol(const InteractionSpec& spec, const FilterSpec& filter,
                                 const RateSchedule& s1, const RateSchedule& s2,
                                 const QuadratureOptions& options) {
  spec.validate();
  const TransferProfile p =
      transfer_coefficients(filter, s1, s2, spec.zeta1, spec.direction, options);
  const NoiseModes m = noise_modes(p, spec.zeta1, spec.direction);
  TransferReport r;
  r.M1 = p.M1;
  r.M2 = p.M2;
  if (spec.topology == Topology::parallel) {
    const Eigen::ArrayXd g = filter_parallel_g(m.B1, m.B2, spec.zeta1);
    r.err_var = error_variance_parallel(m, g, spec.zeta1, spec.n_in);
  } else {
    r.err_var = error_variance_sequential(m, spec.zeta1, spec.n_in);
  }
  r.fidelity = fidelity_from_error(r.err_var);
  r.residuals = verify_identities(p, m, spec.zeta1, spec.direction);
  return r;
}

OptimalProtocol optimal_protocol(const InteractionSpec& spec) {
  spec.validate(true);
  const double G1 = spec.gamma_ref, T = spec.T;
  if (spec.direction == Direction::teleport_2_to_1)
    return {FilterSpec::renormalized(spec.direction, spec.zeta1, G1, T),
            RateSchedule::constant(G1, T),
            RateSchedule::optimal_teleport(spec.zeta1, G1, T)};
  return {FilterSpec::renormalized(spec.direction, spec.zeta1, G1, T),
          RateSchedule::constant(G1, T), RateSchedule::optimal_direct(spec.zeta1, G1, T)};
}

TruncatedSchedule truncated_schedule(Direction direction, double zeta1, double /*zeta2*/,
                                     double Gamma1, double T, double r_max,
                                     const QuadratureOptions& options) {
  if (zeta1 == 0.0) throw UnsupportedParameter("truncated schedule needs zeta1 != 0");
  if (!(r_max > 0.0)) throw DomainError("r_max must be positive");
  const FilterSpec filter = FilterSpec::renormalized(direction, zeta1, Gamma1, T);
  const RateSchedule s1 = RateSchedule::constant(Gamma1, T);
  auto coefficients = [&](double alpha) {
    RateSchedule s2 = RateSchedule::truncated(direction, alpha, Gamma1, T, r_max);
    const TransferProfile p = transfer_coefficients(filter, s1, s2, zeta1, direction, options);
    return std::tuple{std::move(s2), p.M1, p.M2};
  };
  // Relative mismatch; M1 = M2 is invariant under rescaling the filter.
  auto mismatch = [&](double alpha) {
    const auto [s2, M1, M2] = coefficients(alpha);
    const double d = (M1 - M2) / std::abs(M1);
    if (!std::isfinite(d)) throw ConvergenceError("transfer coefficients are not finite", d);
    return d;
  };

  // Roots come in pairs around the mismatch maximum, so the bracket is scanned
  // for sign changes rather than tested at its ends. The change nearest zeta1
  // wins. alpha keeps the sign of zeta1; alpha = 0 has no schedule.
  constexpr int kCells = 16;
  const double floor = 1e-3 * std::abs(zeta1);
  double half = 0.5 * std::abs(zeta1);
  double lo = 0.0, hi = 0.0, flo = 0.0, closest = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int widen = 0; widen < 4 && !found; ++widen, half *= 2.0) {
    auto clip = [&](double a) { return zeta1 < 0.0 ? std::min(a, -floor) : std::max(a, floor); };
    const double a0 = clip(zeta1 - half), a1 = clip(zeta1 + half);
    double best_gap = std::numeric_limits<double>::infinity();
    double prev_a = a0, prev_f = mismatch(a0);
    closest = std::min(closest, std::abs(prev_f));
    for (int k = 1; k <= kCells; ++k) {
      const double a = a0 + (a1 - a0) * k / kCells;
      const double f = mismatch(a);
      closest = std::min(closest, std::abs(f));
      if ((f > 0.0) != (prev_f > 0.0) || f == 0.0) {
        const double gap = std::min(std::abs(prev_a - zeta1), std::abs(a - zeta1));
        if (gap < best_gap) {
          best_gap = gap;
          lo = prev_a;
          hi = a;
          flo = prev_f;
          found = true;
        }
      }
      prev_a = a;
      prev_f = f;
    }
  }
  if (!found)
    throw ConvergenceError("M1 = M2 not attainable for any alpha in the bracket", closest);

  double mid = 0.5 * (lo + hi), fmid = mismatch(mid);
  for (int i = 0; i < 200 && std::abs(fmid) > 1e-8; ++i) {
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
    mid = 0.5 * (lo + hi);
    fmid = mismatch(mid);
  }
  if (std::abs(fmid) > 1e-8) throw ConvergenceError("alpha bisection stalled", std::abs(fmid));
  auto [s2, M1, M2] = coefficients(mid);
  return {mid, std::move(s2), filter.scaled(1.0 / M1), std::abs(fmid)};
}

}  // namespace pretro
