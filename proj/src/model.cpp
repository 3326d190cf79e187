#include "pretro/model.hpp"

#include <cmath>
#include <string>

#include "pretro/errors.hpp"

namespace pretro {

std::string_view to_string(Topology t) {
  return t == Topology::sequential ? "sequential" : "parallel";
}

std::string_view to_string(Direction d) {
  return d == Direction::teleport_2_to_1 ? "teleport" : "direct";
}

Topology topology_from_string(std::string_view s) {
  if (s == "sequential") return Topology::sequential;
  if (s == "parallel") return Topology::parallel;
  throw DomainError("unknown topology '" + std::string(s) + "'");
}

Direction direction_from_string(std::string_view s) {
  if (s == "teleport" || s == "transfer_2_to_1") return Direction::teleport_2_to_1;
  if (s == "direct" || s == "transfer_1_to_2") return Direction::direct_1_to_2;
  throw DomainError("unknown direction '" + std::string(s) + "'");
}

void InteractionSpec::validate(bool require_optimal) const {
  if (!(std::abs(zeta1) <= 1.0) || !(std::abs(zeta2) <= 1.0))
    throw DomainError("interaction type must satisfy |zeta| <= 1");
  if (!(gamma_ref >= 0.0)) throw DomainError("reference rate must be >= 0");
  if (!(T > 0.0)) throw DomainError("horizon T must be > 0");
  if (!(n_in >= 0.0)) throw DomainError("thermal occupancy must be >= 0");
  if (topology == Topology::parallel) {
    if (direction != Direction::teleport_2_to_1)
      throw DomainError("parallel topology only supports teleportation");
    if (require_optimal && zeta2 != -zeta1)
      throw DomainError("optimal parallel teleportation requires zeta2 = -zeta1");
  }
}

CouplingParams coupling_from_rates(double Gamma, double zeta) {
  if (!(Gamma >= 0.0)) throw DomainError("rate must be >= 0");
  if (!(std::abs(zeta) <= 1.0)) throw DomainError("|zeta| must be <= 1");
  const double s = std::sqrt(Gamma / 2.0);
  return {(1.0 + zeta) * s, (1.0 - zeta) * s};
}

RateParams rates_from_coupling(double mu, double nu) {
  if (!(mu >= 0.0) || !(nu >= 0.0)) throw DomainError("couplings must be >= 0");
  const double sum = mu + nu;
  if (sum == 0.0) return {0.0, 0.0, 0.0, true};
  const double Gamma = sum * sum / 2.0;
  const double zeta = (mu - nu) / sum;
  return {Gamma, zeta, 2.0 * zeta * Gamma, false};
}

TimeGrid::TimeGrid(double T_, int N_) : T(T_), N(N_), dt(T_ / N_) {
  if (!(T > 0.0)) throw DomainError("horizon T must be > 0");
  if (N < 1) throw DomainError("bin count must be >= 1");
}

Eigen::ArrayXd TimeGrid::nodes() const {
  return (Eigen::ArrayXd::LinSpaced(N, 0, N - 1) + 0.5) * dt;
}

}  // namespace pretro
