#pragma once

#include <functional>
#include <Eigen/Dense>
#include <string_view>

namespace pretro {

enum class Topology { sequential, parallel };

// Which oscillator's state ends up where. Teleportation moves the initial
// state of oscillator 2 onto oscillator 1 at T; direct transfer moves the
// initial state of oscillator 1 onto oscillator 2 at T.
enum class Direction { teleport_2_to_1, direct_1_to_2 };

std::string_view to_string(Topology t);
std::string_view to_string(Direction d);
Topology topology_from_string(std::string_view s);
Direction direction_from_string(std::string_view s);

// Oscillator-field coupling for a two-oscillator protocol. gamma_ref is the
// rate of the oscillator held at constant rate; T is the horizon.
struct InteractionSpec {
  double zeta1 = -1.0;
  double zeta2 = 1.0;
  double gamma_ref = 1.0;
  double T = 1.0;
  double n_in = 0.0;
  Topology topology = Topology::sequential;
  Direction direction = Direction::teleport_2_to_1;

  // Throws DomainError on any violated invariant. The parallel topology only
  // supports teleportation and, when `require_optimal`, zeta2 = -zeta1.
  void validate(bool require_optimal = false) const;
};

// Real, non-negative amplitudes of the beamsplitter (mu) and two-mode
// squeezing (nu) parts of the interaction Hamiltonian.
struct CouplingParams {
  double mu = 0.0;
  double nu = 0.0;
};

struct RateParams {
  double Gamma = 0.0;  // measurement rate
  double zeta = 0.0;   // interaction type
  double gamma = 0.0;  // optical damping, 2 zeta Gamma
  bool degenerate = false;  // mu = nu = 0: zeta undefined, reported as 0
};

CouplingParams coupling_from_rates(double Gamma, double zeta);
RateParams rates_from_coupling(double mu, double nu);

// A time in [0, T] together with its distance to the horizon. Both parts are
// held to full relative precision so rates that diverge at either end can be
// evaluated arbitrarily close to it.
struct Instant {
  double t = 0.0;
  double rem = 0.0;  // T - t
};
inline Instant instant(double t, double T) { return {t, T - t}; }

using TimeFunction = std::function<double(const Instant&)>;

// Uniform bins of width dt with nodes at the bin midpoints.
struct TimeGrid {
  TimeGrid(double T, int N);

  double T;
  int N;
  double dt;

  double node(int k) const { return (k + 0.5) * dt; }
  Eigen::ArrayXd nodes() const;
  Eigen::ArrayXd weights() const { return Eigen::ArrayXd::Constant(N, dt); }
};

// Delta-correlated kernels of the Bogoliubov field modes u^zeta:
//   [u^z(t), u^z'(t')^dag]            = commutator(z, z') delta(t - t')
//   <{u^z(t)^dag, u^z'(t')}>          = correlation(z, z') delta(t - t')
struct NoiseKernel {
  double n_in = 0.0;

  static double commutator(double z, double zp) { return z + zp; }
  double correlation(double z, double zp) const {
    return (1.0 + z * zp) * (2.0 * n_in + 1.0);
  }
};

// Multiplier applied to every field-noise variance by a thermal input.
inline double thermal_factor(double n_in) { return 2.0 * n_in + 1.0; }

}  // namespace pretro
