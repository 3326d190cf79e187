#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "pretro/model.hpp"
#include "pretro/schedules.hpp"

namespace pretro {

struct QuadratureOptions {
  int panels = 24;          // uniform panels in the mapped variable
  int order = 12;           // Gauss-Legendre nodes per panel
  int grading_levels = 30;  // geometric refinement toward a singular end
  double grading_ratio = 0.25;
  int step_order = 12;      // local rule between consecutive nodes
};

// Composite Gauss-Legendre mesh on [0, T]. Near an endpoint where a rate
// diverges like 1/(T - t), time is mapped quadratically (T - t ~ s^2) and the
// last panel is refined geometrically. Power-law endpoint behaviour then makes
// successive panel contributions geometric, and the part beyond the finest
// panel is added as the sum of that series. Integrands decaying only as
// (T - t)^(-1 + eps) with small eps are handled this way.
class Mesh {
 public:
  Mesh(double T, bool singular_start, bool singular_end,
       std::vector<double> breakpoints, const QuadratureOptions& options = {});

  double horizon() const { return T_; }
  Eigen::Index size() const { return t_.size(); }
  const Eigen::ArrayXd& nodes() const { return t_; }
  // T - t at each node, without cancellation.
  const Eigen::ArrayXd& remaining() const { return rem_; }
  Instant node(Eigen::Index i) const { return {t_[i], rem_[i]}; }
  const Eigen::ArrayXd& weights() const { return w_; }
  // Weighted sum over the nodes plus the extrapolated endpoint tails.
  double integrate(const Eigen::ArrayXd& values) const;

  // Stepping points: 0, every node in order, T.
  Eigen::Index points() const { return sigma_.size(); }
  Instant point(Eigen::Index j) const { return map(sigma_[j], comp_[j]); }

  // Integral of f over [point(j), point(j+1)] with the local rule.
  double step_integral(Eigen::Index j, const TimeFunction& f) const;

  // Step j with point(j) <= at <= point(j+1).
  Eigen::Index locate(const Instant& at) const;
  // Integral of f over [at, point(j+1)] (to_next) or [point(j), at], where
  // `at` lies in step j.
  double partial_step(Eigen::Index j, const Instant& at, bool to_next,
                      const TimeFunction& f) const;

 private:
  // Mapped variable s in [0, 1] with its complement c = 1 - s.
  Instant map(double s, double c) const;
  double jacobian(double s, double c) const;

  double panel_integral(double s0, double c0, double s1, double c1,
                        const TimeFunction& f) const;
  // Mapped coordinates (s, 1 - s) of a time.
  std::pair<double, double> coordinates(const Instant& at) const;
  // Integral from mapped coordinate c (complement) up to T, or from 0 up to
  // mapped coordinate s, across a singular end.
  double to_end_integral(double c, const TimeFunction& f) const;
  double from_start_integral(double s, const TimeFunction& f) const;

  double T_;
  bool start_, end_;
  int order_;
  double ratio_;
  int step_order_;
  double first_edge_ = 0.0;  // finest graded edge near 0 (mapped variable)
  double last_edge_ = 0.0;   // finest graded edge near T (complement)
  Eigen::ArrayXd t_, rem_, w_;
  Eigen::ArrayXd sigma_, comp_;  // stepping points in the mapped variable
};

// Integral of `rho` over [a, b]; the damping density of a propagator.
using DampingIntegral = std::function<double(const Instant&, const Instant&)>;

// Running integrals with exponential propagators, returned at every stepping
// point (0, nodes..., T):
//   forward:  F(t) = int_0^t g(t') exp(+1/2 int_{t'}^{t} rho) dt'
//   backward: G(t) = int_t^T g(t') exp(-1/2 int_{t}^{t'} rho) dt'
Eigen::ArrayXd running_forward(const Mesh& mesh, const TimeFunction& g,
                               const DampingIntegral& rho);
Eigen::ArrayXd running_backward(const Mesh& mesh, const TimeFunction& g,
                                const DampingIntegral& rho);

Mesh mesh_for(const RateSchedule& s1, const RateSchedule& s2,
              const QuadratureOptions& options = {});

// Partial transfer coefficients M1(t), M2(t) sampled on the mesh, for a
// filter acting on the renormalized record.
struct TransferProfile {
  std::shared_ptr<const Mesh> mesh;
  Eigen::ArrayXd t, w;
  Eigen::ArrayXd filter, gamma1, gamma2;
  Eigen::ArrayXd M1t, M2t;
  double M1 = 0.0, M2 = 0.0;
  double int_filter_sq = 0.0;
};

TransferProfile transfer_coefficients(const FilterSpec& filter, const RateSchedule& s1,
                                      const RateSchedule& s2, double zeta1,
                                      Direction direction,
                                      const QuadratureOptions& options = {});

// Filter acting on the renormalized record that is equivalent to `raw`
// acting on the bare record, for the given oscillator-2 schedule. The
// correction term is evaluated on demand from a precomputed M2 profile.
FilterSpec renormalize_filter(const FilterSpec& raw, const RateSchedule& s2, double zeta1,
                              double zeta2, Direction direction,
                              const QuadratureOptions& options = {});

// Temporal noise modes B1(t), B2(t) of the error operator.
struct NoiseModes {
  std::shared_ptr<const Mesh> mesh;
  Eigen::ArrayXd t, w;
  Eigen::ArrayXd B1, B2;
};

// Throws UnsupportedParameter at zeta1 = 0 where the modes are undefined.
NoiseModes noise_modes(const TransferProfile& profile, double zeta1, Direction direction);

double error_variance_sequential(const NoiseModes& modes, double zeta1, double n_in = 0.0);
// Parallel topology with auxiliary filter g sampled on the same nodes.
double error_variance_parallel(const NoiseModes& modes, const Eigen::ArrayXd& g,
                               double zeta1, double n_in = 0.0);

// Relative residuals of the unitarity identities linking int B_j^2,
// int f^2 and M_j^2, and of the combined commutator relation.
struct IdentityResiduals {
  double b1 = 0.0;
  double b2 = 0.0;
  double combined = 0.0;
  double max() const { return std::max({b1, b2, combined}); }
};

IdentityResiduals verify_identities(const TransferProfile& profile,
                                    const NoiseModes& modes, double zeta1,
                                    Direction direction);

struct TransferReport {
  double M1 = 0.0, M2 = 0.0;
  double err_var = 0.0;
  double fidelity = 0.0;
  IdentityResiduals residuals;
};

// Full evaluation of one protocol configuration. For the parallel topology
// the auxiliary filter is set to its optimum.
TransferReport evaluate_protocol(const InteractionSpec& spec, const FilterSpec& filter,
                                 const RateSchedule& s1, const RateSchedule& s2,
                                 const QuadratureOptions& options = {});

// Optimal renormalized filter and schedules for a spec: oscillator 1 at the
// constant rate spec.gamma_ref, oscillator 2 on the optimal schedule.
struct OptimalProtocol {
  FilterSpec filter;
  RateSchedule s1;
  RateSchedule s2;
};
OptimalProtocol optimal_protocol(const InteractionSpec& spec);

// Capped teleport/direct schedule whose exponent alpha is retuned so that
// M1 = M2 with the optimal renormalized filter kept fixed. `filter` is that
// filter scaled so that M1 = M2 = 1. zeta2 does not enter. Throws
// ConvergenceError (carrying the smallest mismatch seen) when no alpha works,
// which is the usual outcome for small r_max or large Gamma1*T.
struct TruncatedSchedule {
  double alpha = 0.0;
  RateSchedule schedule;
  FilterSpec filter;
  double residual = 0.0;  // |M1 - M2| / M1 at the returned alpha
};

TruncatedSchedule truncated_schedule(Direction direction, double zeta1, double zeta2,
                                     double Gamma1, double T, double r_max,
                                     const QuadratureOptions& options = {});

}  // namespace pretro
