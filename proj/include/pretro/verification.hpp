#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pretro/binsim.hpp"
#include "pretro/model.hpp"
#include "pretro/schedules.hpp"

namespace pretro {

// A random but admissible (filter, schedules) configuration for exercising
// the commutator identities, which hold for any filter and schedule.
struct IdentityCase {
  InteractionSpec spec;
  FilterSpec filter = FilterSpec::custom([](double) { return 0.0; });
  RateSchedule s1 = RateSchedule::constant(0.0, 1.0);
  RateSchedule s2 = RateSchedule::constant(0.0, 1.0);
  std::string description;
};

IdentityCase random_identity_case(std::mt19937_64& rng, Direction direction);

// Largest identity residual for a conditional case.
double identity_residual(const IdentityCase& c);

// Largest unconditional identity residual for a random (zeta1, zeta2,
// Gamma1 schedule, Gamma2 schedule).
double random_unconditional_residual(std::mt19937_64& rng, std::string* description = nullptr);

struct CheckResult {
  std::string name;
  bool passed = true;
  bool warning = false;  // passed, but with a convergence concern
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  int bins = 4000;
  int identity_cases = 100;
  int trials = 2000;
  int batches = 20;
  std::uint64_t seed = 0;
  int threads = 1;
  // Weight the c^dag sideband of every record by (1 + record_imbalance);
  // a nonzero value is a negative control that must fail.
  double record_imbalance = 0.0;
};

std::vector<CheckResult> run_verification(const VerifyOptions& options);

// Binsim against the closed form on the optimal protocol.
struct OracleComparison {
  double M1 = 0.0, M2 = 0.0;
  double err_var = 0.0, closed_form = 0.0;
  // max(|M1 - 1|, |M2 - 1|, |err/closed_form - 1|)
  double residual = 0.0;
  double measurement_commutator = 0.0;
  int bins = 0;
};

// Optimal protocol on the binsim grid: raw filter for sequential topologies
// (zeta2 is forced to 0 for direct transfer, where the divergent start makes
// other values ill-posed in the bare frame); renormalized filter and the
// optimal auxiliary filter for parallel teleportation with zeta2 = -zeta1.
OracleComparison binsim_oracle(Direction direction, Topology topology, double zeta1,
                               double zeta2, double Gamma1T, const BinSimOptions& options,
                               double n_in = 0.0);

}  // namespace pretro
