#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "pretro/model.hpp"
#include "pretro/schedules.hpp"

namespace pretro {

using cplx = std::complex<double>;

// Ordered operator basis for the binned field. In the rotating frame each
// time bin carries two independent sideband modes: `a` (coupled through the
// beamsplitter part) and `c` (coupled through the squeezing part), so that
//   u^zeta_k = [(1 + zeta) a_k + (1 - zeta) c_k^dag] / sqrt(2).
// Layout: b1, b1^dag, b2, b2^dag, then for bin k and field set f the block
// a, a^dag, c, c^dag at 4 + 4 (sets k + f). Every operator sits next to its
// adjoint, and each such pair is canonical.
struct ModeLayout {
  int bins = 0;
  int sets = 1;  // independent field sets (2 for the parallel topology)

  Eigen::Index size() const { return 4 + 4 * Eigen::Index(sets) * bins; }
  static Eigen::Index b1() { return 0; }
  static Eigen::Index b2() { return 2; }
  Eigen::Index a(int k, int set = 0) const { return 4 + 4 * (Eigen::Index(sets) * k + set); }
  Eigen::Index c(int k, int set = 0) const { return a(k, set) + 2; }
  // Entries at or beyond this index are zero for operators at bin k.
  Eigen::Index active(int k) const { return 4 + 4 * Eigen::Index(sets) * (k + 1); }
};

// Heisenberg operator as a linear combination of the basis operators.
class ModeExpansion {
 public:
  ModeExpansion() = default;
  explicit ModeExpansion(const ModeLayout& layout)
      : layout_(layout), c_(Eigen::VectorXcd::Zero(layout.size())) {}
  static ModeExpansion unit(const ModeLayout& layout, Eigen::Index index);

  const ModeLayout& layout() const { return layout_; }
  const Eigen::VectorXcd& coefficients() const { return c_; }
  Eigen::VectorXcd& coefficients() { return c_; }
  cplx operator[](Eigen::Index i) const { return c_[i]; }

  ModeExpansion adjoint() const;
  // (e^{-i phi} X + e^{i phi} X^dag) / sqrt(2): x for phi = 0, p for pi/2.
  ModeExpansion quadrature(double phi) const;

  ModeExpansion& operator+=(const ModeExpansion& o);
  ModeExpansion& operator*=(cplx s);
  friend ModeExpansion operator+(ModeExpansion x, const ModeExpansion& y) { return x += y; }
  friend ModeExpansion operator*(cplx s, ModeExpansion x) { return x *= s; }

  // Drops the oscillator entries, leaving the field-only part.
  ModeExpansion field_part() const;

 private:
  ModeLayout layout_;
  Eigen::VectorXcd c_;
};

// [x, y] for two expansions over the same layout.
cplx commutator(const ModeExpansion& x, const ModeExpansion& y);

// Thermal occupancies of the initial oscillator states and the input field.
struct Occupancies {
  double n_in = 0.0;
  double nbar1 = 0.0;
  double nbar2 = 0.0;
};

// Symmetrized variance <{X, X^dag}>/2 in the zero-mean thermal state. For a
// complex error operator this is the single-quadrature variance.
double variance(const ModeExpansion& x, const Occupancies& occ = {});

// --- propagation --------------------------------------------------------------

// The horizon is cut into `bins` uniform bins of width dt. A bin over which a
// rate integrates to more than min(max_rate_dt, refine_ratio * Gamma_ref * dt)
// is bisected until it does not, Gamma_ref being the larger reference rate of
// the two schedules. Toward a divergent end the bisection stops at width
// min_width * dt, and that last bin runs at the capped rate max_rate_dt / width.
struct BinSimOptions {
  int bins = 4000;
  double max_rate_dt = 0.1;
  double refine_ratio = 25.0;
  double min_width = 1e-12;
  double symplectic_tolerance = 1e-10;
  // Weight of the c^dag sideband in every record is (1 + record_imbalance).
  // Nonzero values break the record's normality; used as a negative control.
  double record_imbalance = 0.0;
};

// Bin edges after refinement, from 0 to T.
std::vector<Instant> bin_edges(const RateSchedule& s1, const RateSchedule& s2,
                               const BinSimOptions& options);

// A refined bin with its exactly averaged rates.
struct BinRates {
  Instant start, stop;
  double dt = 0.0;
  double Gamma1 = 0.0, Gamma2 = 0.0;
  Instant midpoint() const {
    return {0.5 * (start.t + stop.t), 0.5 * (start.rem + stop.rem)};
  }
};

std::vector<BinRates> bin_rates(const RateSchedule& s1, const RateSchedule& s2,
                                const BinSimOptions& options);

// One bin of the exact collision map. Each operator after the bin is a
// combination of {b1, b2, a, c^dag, a', c'^dag} before it, where the primed
// modes are the second field set of the parallel topology.
using LocalExpansion = Eigen::Matrix<cplx, 6, 1>;

struct BinCollision {
  LocalExpansion b1, b2;
  LocalExpansion record;       // sequential record or parallel m_minus
  LocalExpansion record_plus;  // parallel m_plus, zero otherwise
};

BinCollision bin_collision(double zeta1, double zeta2, Topology topology, double Gamma1,
                           double Gamma2, double dt, double record_imbalance = 0.0);

// State handed to an observer after bin k has been processed.
struct BinStep {
  int k;
  Instant start, stop;
  const ModeExpansion& b1;
  const ModeExpansion& b2;
  // Dimensionless binned records m(t_k) sqrt(dt_k). Sequential: the single
  // record; parallel: m_minus, with m_plus in `record_plus`.
  const ModeExpansion& record;
  const ModeExpansion* record_plus;
};

using BinObserver = std::function<void(const BinStep&)>;

struct Propagation {
  ModeLayout layout;
  std::vector<Instant> edges;
  ModeExpansion b1_final, b2_final;
  double max_symplectic_defect = 0.0;
};

Propagation propagate(const InteractionSpec& spec, const RateSchedule& s1,
                      const RateSchedule& s2, const BinSimOptions& options = {},
                      const BinObserver& observer = {});

// --- the measurement operator and transfer extraction -----------------------------

struct MeasuredProtocol {
  Propagation run;
  // sum_k f(t_k) sqrt(dt_k) m_k (+ g(t_k) sqrt(dt_k) m_plus_k), t_k the bin midpoint
  ModeExpansion M;
};

// `filter` acts on the bare record; `aux` is the filter for the parallel
// m_plus record (ignored for the sequential topology).
MeasuredProtocol measurement_operator(const InteractionSpec& spec, const FilterSpec& filter,
                                      const RateSchedule& s1, const RateSchedule& s2,
                                      const std::optional<FilterSpec>& aux = std::nullopt,
                                      const BinSimOptions& options = {});

struct ExtractedTransfer {
  double M1 = 0.0, M2 = 0.0;
  ModeExpansion error;            // field-only
  double cancellation = 0.0;      // largest leftover oscillator coefficient
  double imaginary_part = 0.0;    // largest |Im| of the fitted M's
};

// Fits M1, M2 in M = eps - M1 b1(T) - M2 b2(0) (teleport) or
// M = eps - M1 b1(0) - M2 b2(T) (direct). Throws ConvergenceError when the
// leftover oscillator coefficients exceed 1e-6.
ExtractedTransfer extract_transfer(const MeasuredProtocol& measured, Direction direction);

struct BinSimReport {
  double M1 = 0.0, M2 = 0.0;
  double err_var = 0.0;          // single-quadrature variance of eps
  double var_x = 0.0, var_p = 0.0;
  double var_M = 0.0;            // <|M|^2> with vacuum oscillators
  double measurement_commutator = 0.0;  // |[M, M^dag]|
  double symplectic_defect = 0.0;  // max |[b, b^dag] - 1| / |b|^2 over the run
  double cancellation = 0.0;
  int bins = 0;  // after refinement
};

BinSimReport simulate_protocol(const InteractionSpec& spec, const FilterSpec& filter,
                               const RateSchedule& s1, const RateSchedule& s2,
                               const std::optional<FilterSpec>& aux = std::nullopt,
                               const BinSimOptions& options = {});

}  // namespace pretro
