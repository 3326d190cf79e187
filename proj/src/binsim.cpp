#include "pretro/binsim.hpp"

#include <algorithm>
#include <cmath>

#include "pretro/errors.hpp"

namespace pretro {

namespace {
constexpr cplx I{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// -expm1(-y)/y with its limit 1 at y = 0.
double relaxation(double y) {
  if (std::abs(y) < 1e-12) return 1.0 - 0.5 * y;
  return -std::expm1(-y) / y;
}
}  // namespace

// --- ModeExpansion ----------------------------------------------------------------

ModeExpansion ModeExpansion::unit(const ModeLayout& layout, Eigen::Index index) {
  ModeExpansion e(layout);
  e.c_[index] = 1.0;
  return e;
}

ModeExpansion ModeExpansion::adjoint() const {
  ModeExpansion r(layout_);
  for (Eigen::Index i = 0; i < c_.size(); i += 2) {
    r.c_[i] = std::conj(c_[i + 1]);
    r.c_[i + 1] = std::conj(c_[i]);
  }
  return r;
}

ModeExpansion ModeExpansion::quadrature(double phi) const {
  const cplx phase = std::polar(1.0, phi);
  ModeExpansion r = adjoint();
  r.c_ = kInvSqrt2 * (std::conj(phase) * c_ + phase * r.c_);
  return r;
}

ModeExpansion& ModeExpansion::operator+=(const ModeExpansion& o) {
  c_ += o.c_;
  return *this;
}

ModeExpansion& ModeExpansion::operator*=(cplx s) {
  c_ *= s;
  return *this;
}

ModeExpansion ModeExpansion::field_part() const {
  ModeExpansion r = *this;
  r.c_.head(4).setZero();
  return r;
}

cplx commutator(const ModeExpansion& x, const ModeExpansion& y) {
  const auto& a = x.coefficients();
  const auto& b = y.coefficients();
  cplx sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); i += 2) sum += a[i] * b[i + 1] - a[i + 1] * b[i];
  return sum;
}

double variance(const ModeExpansion& x, const Occupancies& occ) {
  const auto& c = x.coefficients();
  auto pair = [&](Eigen::Index i) { return std::norm(c[i]) + std::norm(c[i + 1]); };
  double sum = pair(0) * (2.0 * occ.nbar1 + 1.0) + pair(2) * (2.0 * occ.nbar2 + 1.0);
  double field = 0.0;
  for (Eigen::Index i = 4; i < c.size(); i += 2) field += pair(i);
  return 0.5 * (sum + field * thermal_factor(occ.n_in));
}

// --- propagation ----------------------------------------------------------------

namespace {

using Local = LocalExpansion;

Local local_unit(int i) {
  Local l = Local::Zero();
  l[i] = 1.0;
  return l;
}

// Exact collision of an oscillator with one bin of its input field. The
// coupling time is chosen so that the oscillator's own amplitude decays by
// exactly exp(-zeta Gamma dt), which keeps the map symplectic for any Gamma dt.
void collide(Local& b, Local& a, Local& cd, double zeta, double Gamma, double dt) {
  if (Gamma == 0.0) return;
  const double mu = (1.0 + zeta) * std::sqrt(0.5 * Gamma);
  const double nu = (1.0 - zeta) * std::sqrt(0.5 * Gamma);
  const double x = zeta * Gamma * dt;
  const double C = std::exp(-x);
  const double S = std::sqrt(dt * relaxation(2.0 * x));  // sin(k theta)/k
  const double R = 0.5 * dt * relaxation(x);             // (1 - cos(k theta))/k^2
  const Local drive = mu * a + nu * cd;
  const Local b_new = C * b - I * S * drive;
  const Local a_new = a - I * mu * S * b - mu * R * drive;
  const Local cd_new = cd + I * nu * S * b + nu * R * drive;
  b = b_new;
  a = a_new;
  cd = cd_new;
}

Local bogoliubov(double zeta, const Local& a, const Local& cd) {
  return kInvSqrt2 * ((1.0 + zeta) * a + (1.0 - zeta) * cd);
}

void materialize(const Local& l, const Eigen::VectorXcd& B1, const Eigen::VectorXcd& B2,
                 const ModeLayout& layout, int k, Eigen::Index n, Eigen::VectorXcd& out) {
  out.head(n) = l[0] * B1.head(n) + l[1] * B2.head(n);
  out[layout.a(k, 0)] += l[2];
  out[layout.c(k, 0) + 1] += l[3];
  if (layout.sets > 1) {
    out[layout.a(k, 1)] += l[4];
    out[layout.c(k, 1) + 1] += l[5];
  }
}

// |[b, b^dag] - 1| relative to the squared norm of the expansion, which sets
// the rounding floor once the oscillator has been amplified.
double symplectic_defect(const Eigen::VectorXcd& b, Eigen::Index n) {
  double sum = 0.0, scale = 0.0;
  for (Eigen::Index i = 0; i < n; i += 2) {
    sum += std::norm(b[i]) - std::norm(b[i + 1]);
    scale += std::norm(b[i]) + std::norm(b[i + 1]);
  }
  return std::abs(sum - 1.0) / std::max(1.0, scale);
}

struct RecordWeights {
  Eigen::VectorXd record, plus;  // per bin, f(t_k) sqrt(dt_k); plus empty when unused
};

// Bin width, taken from whichever coordinate is more precise.
double width(const Instant& a, const Instant& b) {
  return a.t < b.rem ? b.t - a.t : a.rem - b.rem;
}

bool touches_divergence(const RateSchedule& s, const Instant& a, const Instant& b) {
  switch (s.singular_end()) {
    case SingularEnd::start: return a.t == 0.0;
    case SingularEnd::end: return b.rem == 0.0;
    case SingularEnd::none: return false;
  }
  return false;
}

// Integral of the rate over a bin; a bin that reaches a divergence runs at the
// capped rate max_rate_dt / width.
double bin_integral(const RateSchedule& s, const Instant& a, const Instant& b,
                    double max_rate_dt) {
  if (touches_divergence(s, a, b)) return s.with_cap(max_rate_dt / width(a, b)).integral(a, b);
  return s.integral(a, b);
}

void refine(const RateSchedule& s1, const RateSchedule& s2, const Instant& a, const Instant& b,
            double min_width, double limit, int depth, std::vector<Instant>& edges) {
  const bool divergent = touches_divergence(s1, a, b) || touches_divergence(s2, a, b);
  bool accept;
  if (divergent) {
    accept = width(a, b) <= min_width;
  } else {
    accept = s1.integral(a, b) <= limit && s2.integral(a, b) <= limit;
  }
  if (accept) {
    edges.push_back(b);
    return;
  }
  if (depth > 200) throw DomainError("bin refinement did not terminate");
  const Instant m{0.5 * (a.t + b.t), 0.5 * (a.rem + b.rem)};
  refine(s1, s2, a, m, min_width, limit, depth + 1, edges);
  refine(s1, s2, m, b, min_width, limit, depth + 1, edges);
}

}  // namespace

std::vector<Instant> bin_edges(const RateSchedule& s1, const RateSchedule& s2,
                               const BinSimOptions& options) {
  if (options.bins < 1) throw DomainError("binsim needs at least one bin");
  if (!(options.max_rate_dt > 0.0) || !(options.min_width > 0.0))
    throw DomainError("binsim rate limit and minimum width must be positive");
  const int N = options.bins;
  const double T = s1.horizon(), dt = T / N;
  // The refinement threshold shrinks with dt so that refined bins converge
  // at the same rate as the uniform ones.
  const double reference = std::max(s1.reference_rate(), s2.reference_rate());
  double limit = options.max_rate_dt;
  if (reference > 0.0) limit = std::min(limit, options.refine_ratio * reference * dt);
  limit *= 1.0 + 1e-9;
  std::vector<Instant> edges{Instant{0.0, T}};
  for (int k = 0; k < N; ++k) {
    const Instant a{k * dt, (N - k) * dt};
    const Instant b{(k + 1) * dt, (N - k - 1) * dt};
    refine(s1, s2, a, b, options.min_width * dt, limit, 0, edges);
  }
  return edges;
}

std::vector<BinRates> bin_rates(const RateSchedule& s1, const RateSchedule& s2,
                                const BinSimOptions& options) {
  const std::vector<Instant> edges = bin_edges(s1, s2, options);
  std::vector<BinRates> bins(edges.size() - 1);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    BinRates& b = bins[k];
    b.start = edges[k];
    b.stop = edges[k + 1];
    b.dt = width(b.start, b.stop);
    b.Gamma1 = bin_integral(s1, b.start, b.stop, options.max_rate_dt) / b.dt;
    b.Gamma2 = bin_integral(s2, b.start, b.stop, options.max_rate_dt) / b.dt;
  }
  return bins;
}

BinCollision bin_collision(double zeta1, double zeta2, Topology topology, double Gamma1,
                           double Gamma2, double dt, double record_imbalance) {
  BinCollision c;
  c.b1 = local_unit(0);
  c.b2 = local_unit(1);
  Local a = local_unit(2), cd = local_unit(3);
  collide(c.b1, a, cd, zeta1, Gamma1, dt);
  c.record_plus = Local::Zero();
  if (topology == Topology::sequential) {
    collide(c.b2, a, cd, zeta2, Gamma2, dt);
    c.record = kInvSqrt2 * (-I * a + I * (1.0 + record_imbalance) * cd);
  } else {
    Local a2 = local_unit(4), cd2 = local_unit(5);
    collide(c.b2, a2, cd2, zeta2, Gamma2, dt);
    const double s = 1.0 / (2.0 * zeta1);
    const double w = 1.0 + record_imbalance;
    c.record = s * (-I * bogoliubov(zeta1, a, cd) + I * bogoliubov(-zeta1, a2, w * cd2));
    c.record_plus = s * (-I * bogoliubov(zeta1, a2, cd2) + I * bogoliubov(-zeta1, a, w * cd));
  }
  return c;
}

namespace {

Propagation run(const InteractionSpec& spec, const RateSchedule& s1,
                const RateSchedule& s2, const BinSimOptions& options,
                const RecordWeights* weights, ModeExpansion* accumulated,
                const BinObserver& observer) {
  spec.validate();
  const bool parallel = spec.topology == Topology::parallel;
  if (parallel && spec.zeta1 == 0.0)
    throw UnsupportedParameter("parallel records are undefined at zeta1 = 0");
  const double T = spec.T;
  if (std::abs(s1.horizon() - T) > 1e-12 * T || std::abs(s2.horizon() - T) > 1e-12 * T)
    throw DomainError("schedule horizon differs from the protocol horizon");

  Propagation p;
  const std::vector<BinRates> bins = bin_rates(s1, s2, options);
  p.edges.reserve(bins.size() + 1);
  p.edges.push_back(bins.front().start);
  for (const BinRates& b : bins) p.edges.push_back(b.stop);
  const int N = int(bins.size());
  p.layout = ModeLayout{N, parallel ? 2 : 1};
  const ModeLayout& L = p.layout;
  const double z1 = spec.zeta1, z2 = spec.zeta2;
  if (weights && weights->record.size() != N)
    throw DomainError("filter weights do not match the bin count");

  Eigen::VectorXcd B1 = Eigen::VectorXcd::Zero(L.size());
  Eigen::VectorXcd B2 = Eigen::VectorXcd::Zero(L.size());
  B1[ModeLayout::b1()] = 1.0;
  B2[ModeLayout::b2()] = 1.0;
  if (accumulated) *accumulated = ModeExpansion(L);

  ModeExpansion b1_view(L), b2_view(L), rec(L), rec_plus(L);

  for (int k = 0; k < N; ++k) {
    const BinRates& bin = bins[k];
    const BinCollision col = bin_collision(z1, z2, spec.topology, bin.Gamma1, bin.Gamma2, bin.dt,
                                              options.record_imbalance);
    const Local& b1 = col.b1;
    const Local& b2 = col.b2;
    const Local& r = col.record;
    const Local& r_plus = col.record_plus;

    const Eigen::Index n = L.active(k);
    if (observer) {
      materialize(r, B1, B2, L, k, n, rec.coefficients());
      if (parallel) materialize(r_plus, B1, B2, L, k, n, rec_plus.coefficients());
    }
    if (accumulated && weights) {
      Local w = weights->record[k] * r;
      if (parallel && weights->plus.size() > 0) w += weights->plus[k] * r_plus;
      Eigen::VectorXcd& M = accumulated->coefficients();
      M.head(n) += w[0] * B1.head(n) + w[1] * B2.head(n);
      M[L.a(k, 0)] += w[2];
      M[L.c(k, 0) + 1] += w[3];
      if (parallel) {
        M[L.a(k, 1)] += w[4];
        M[L.c(k, 1) + 1] += w[5];
      }
    }
    // b2 first: it may depend on the old b1.
    B2.head(n) = b2[1] * B2.head(n) + b2[0] * B1.head(n);
    B2[L.a(k, 0)] += b2[2];
    B2[L.c(k, 0) + 1] += b2[3];
    B1.head(n) *= b1[0];
    B1[L.a(k, 0)] += b1[2];
    B1[L.c(k, 0) + 1] += b1[3];
    if (parallel) {
      B2[L.a(k, 1)] += b2[4];
      B2[L.c(k, 1) + 1] += b2[5];
    }

    const double defect = std::max(symplectic_defect(B1, n), symplectic_defect(B2, n));
    p.max_symplectic_defect = std::max(p.max_symplectic_defect, defect);
    if (!(defect <= options.symplectic_tolerance))
      throw StabilityError("bin update broke the canonical commutator");

    if (observer) {
      b1_view.coefficients() = B1;
      b2_view.coefficients() = B2;
      observer(BinStep{k, bin.start, bin.stop, b1_view, b2_view, rec,
                       parallel ? &rec_plus : nullptr});
    }
  }
  p.b1_final = ModeExpansion(L);
  p.b1_final.coefficients() = B1;
  p.b2_final = ModeExpansion(L);
  p.b2_final.coefficients() = B2;
  return p;
}

}  // namespace

Propagation propagate(const InteractionSpec& spec, const RateSchedule& s1,
                      const RateSchedule& s2, const BinSimOptions& options,
                      const BinObserver& observer) {
  return run(spec, s1, s2, options, nullptr, nullptr, observer);
}

MeasuredProtocol measurement_operator(const InteractionSpec& spec, const FilterSpec& filter,
                                      const RateSchedule& s1, const RateSchedule& s2,
                                      const std::optional<FilterSpec>& aux,
                                      const BinSimOptions& options) {
  const std::vector<Instant> edges = bin_edges(s1, s2, options);
  const int N = int(edges.size()) - 1;
  const bool with_aux = spec.topology == Topology::parallel && aux;
  RecordWeights w;
  w.record.resize(N);
  if (with_aux) w.plus.resize(N);
  for (int k = 0; k < N; ++k) {
    const Instant& a = edges[k];
    const Instant& b = edges[k + 1];
    const Instant mid{0.5 * (a.t + b.t), 0.5 * (a.rem + b.rem)};
    const double root = std::sqrt(width(a, b));
    w.record[k] = filter(mid) * root;
    if (with_aux) w.plus[k] = (*aux)(mid) * root;
  }
  MeasuredProtocol m;
  m.run = run(spec, s1, s2, options, &w, &m.M, {});
  return m;
}

ExtractedTransfer extract_transfer(const MeasuredProtocol& measured, Direction direction) {
  const ModeLayout& L = measured.run.layout;
  const ModeExpansion& M = measured.M;
  const bool teleport = direction == Direction::teleport_2_to_1;
  const ModeExpansion v1 = teleport ? measured.run.b1_final : ModeExpansion::unit(L, 0);
  const ModeExpansion v2 = teleport ? ModeExpansion::unit(L, 2) : measured.run.b2_final;

  Eigen::Matrix2cd A;
  A << v1[0], v2[0], v1[2], v2[2];
  const Eigen::Vector2cd rhs(-M[0], -M[2]);
  const Eigen::Vector2cd x = A.fullPivLu().solve(rhs);

  ExtractedTransfer r;
  r.M1 = x[0].real();
  r.M2 = x[1].real();
  r.imaginary_part = std::max(std::abs(x[0].imag()), std::abs(x[1].imag()));
  ModeExpansion eps = M + x[0] * v1 + x[1] * v2;
  const double scale = std::max({std::abs(x[0]), std::abs(x[1]), 1.0});
  r.cancellation = eps.coefficients().head(4).cwiseAbs().maxCoeff() / scale;
  if (!(r.cancellation <= 1e-6))
    throw ConvergenceError("oscillator terms do not cancel in the error operator",
                           r.cancellation);
  r.error = eps.field_part();
  return r;
}

BinSimReport simulate_protocol(const InteractionSpec& spec, const FilterSpec& filter,
                               const RateSchedule& s1, const RateSchedule& s2,
                               const std::optional<FilterSpec>& aux,
                               const BinSimOptions& options) {
  const MeasuredProtocol m = measurement_operator(spec, filter, s1, s2, aux, options);
  const ExtractedTransfer x = extract_transfer(m, spec.direction);
  BinSimReport r;
  r.M1 = x.M1;
  r.M2 = x.M2;
  const Occupancies occ{spec.n_in, 0.0, 0.0};
  r.err_var = variance(x.error, occ);
  r.var_x = variance(x.error.quadrature(0.0), occ);
  r.var_p = variance(x.error.quadrature(0.5 * M_PI), occ);
  r.var_M = variance(m.M, occ);
  const double norm = std::max(1.0, m.M.coefficients().squaredNorm());
  r.measurement_commutator = std::abs(commutator(m.M, m.M.adjoint())) / norm;
  r.symplectic_defect = m.run.max_symplectic_defect;
  r.cancellation = x.cancellation;
  r.bins = m.run.layout.bins;
  return r;
}

}  // namespace pretro
