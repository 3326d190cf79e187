#include "pretro/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pretro/errors.hpp"
#include "pretro/quadrature.hpp"
#include "pretro/trajectories.hpp"
#include "pretro/unconditional.hpp"

namespace pretro {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

// zeta away from 0, where the noise modes are undefined.
double nonzero_zeta(std::mt19937_64& rng) {
  const double z = uniform(rng, 0.05, 1.0);
  return uniform(rng, 0.0, 1.0) < 0.5 ? -z : z;
}

// Positive quadratic rate profile in u = t/T, scaled by `scale`.
RateSchedule random_smooth_rate(std::mt19937_64& rng, double scale, double T, std::string& desc) {
  const double c0 = uniform(rng, 0.1, 2.0), c1 = uniform(rng, -0.09, 2.0),
               c2 = uniform(rng, 0.0, 2.0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "smooth(%.3g, %.3g, %.3g)x%.3g", c0, c1, c2, scale);
  desc = buf;
  return RateSchedule::custom(
      [=](double t) {
        const double u = t / T;
        return scale * (c0 + c1 * u + c2 * u * u);
      },
      T);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

IdentityCase random_identity_case(std::mt19937_64& rng, Direction direction) {
  IdentityCase c;
  const double T = 1.0;
  const double G1 = log_uniform(rng, 0.3, 5.0);
  c.spec.zeta1 = nonzero_zeta(rng);
  c.spec.zeta2 = uniform(rng, -1.0, 1.0);
  c.spec.gamma_ref = G1;
  c.spec.T = T;
  c.spec.direction = direction;
  c.s1 = RateSchedule::constant(G1, T);

  std::string sched;
  if (uniform(rng, 0.0, 1.0) < 0.5) {
    const double alpha = std::clamp(c.spec.zeta1 * uniform(rng, 0.5, 1.5), -1.0, 1.0);
    const double r_max = log_uniform(rng, 5.0, 1e3);
    c.s2 = RateSchedule::truncated(direction, alpha, G1, T, r_max);
    sched = fmt("truncated(alpha=%.4g, r_max=%.4g)", alpha, r_max);
  } else {
    c.s2 = random_smooth_rate(rng, G1, T, sched);
  }

  const double a0 = uniform(rng, -1.0, 1.0), a1 = uniform(rng, -1.0, 1.0),
               a2 = uniform(rng, -1.0, 1.0), kappa = uniform(rng, -2.0, 2.0);
  const double root = std::sqrt(G1);
  c.filter = FilterSpec::custom([=](double t) {
    const double u = t / T;
    return root * (a0 + a1 * u + a2 * u * u + 0.05) * std::exp(kappa * u);
  });
  c.description = fmt("zeta1=%.4g G1T=%.4g ", c.spec.zeta1, G1 * T) + sched +
                  fmt(" filter(%.3g,%.3g,%.3g)", a0, a1, a2);
  return c;
}

double identity_residual(const IdentityCase& c) {
  const TransferProfile p =
      transfer_coefficients(c.filter, c.s1, c.s2, c.spec.zeta1, c.spec.direction);
  const NoiseModes m = noise_modes(p, c.spec.zeta1, c.spec.direction);
  return verify_identities(p, m, c.spec.zeta1, c.spec.direction).max();
}

double random_unconditional_residual(std::mt19937_64& rng, std::string* description) {
  const double T = 1.0;
  const double z1 = nonzero_zeta(rng), z2 = nonzero_zeta(rng);
  const double G2 = log_uniform(rng, 0.3, 10.0);
  std::string d1, d2;
  RateSchedule s1 = RateSchedule::constant(1.0, T);
  if (uniform(rng, 0.0, 1.0) < 0.5) {
    const double shape = std::min(1.0, std::abs(z1) * uniform(rng, 0.3, 1.5));
    const double r_max = log_uniform(rng, 5.0, 1e3);
    s1 = RateSchedule::unconditional(shape, G2, T).with_cap(r_max * G2);
    d1 = fmt("unconditional(%.3g)cap%.3g", shape, r_max);
  } else {
    s1 = random_smooth_rate(rng, G2, T, d1);
  }
  RateSchedule s2 = RateSchedule::constant(G2, T);
  if (uniform(rng, 0.0, 1.0) < 0.5) s2 = random_smooth_rate(rng, G2, T, d2);
  else d2 = fmt("constant(%.3g)", G2);
  if (description)
    *description = fmt("zeta1=%.4g zeta2=%.4g ", z1, z2) + d1 + " / " + d2;
  const UncondCoefficients c = uncond_coefficients(s1, s2, z1, z2);
  return uncond_identities(c, z1, z2).max();
}

OracleComparison binsim_oracle(Direction direction, Topology topology, double zeta1,
                               double zeta2, double Gamma1T, const BinSimOptions& options,
                               double n_in) {
  const double T = 1.0, G1 = Gamma1T / T;
  InteractionSpec spec;
  spec.zeta1 = zeta1;
  spec.gamma_ref = G1;
  spec.T = T;
  spec.n_in = n_in;
  spec.direction = direction;
  spec.topology = topology;
  const bool teleport = direction == Direction::teleport_2_to_1;
  const RateSchedule s1 = RateSchedule::constant(G1, T);
  const RateSchedule s2 = teleport ? RateSchedule::optimal_teleport(zeta1, G1, T)
                                   : RateSchedule::optimal_direct(zeta1, G1, T);
  BinSimReport r;
  if (topology == Topology::parallel) {
    spec.zeta2 = -zeta1;
    const FilterSpec f = FilterSpec::renormalized(direction, zeta1, G1, T);
    const FilterSpec g = FilterSpec::custom(
        [=](double t) { return filter_parallel_g_optimal(t, zeta1, G1, T); });
    r = simulate_protocol(spec, f, s1, s2, g, options);
  } else {
    spec.zeta2 = teleport ? zeta2 : 0.0;
    const FilterSpec f = FilterSpec::raw(direction, zeta1, spec.zeta2, G1, T);
    r = simulate_protocol(spec, f, s1, s2, std::nullopt, options);
  }
  OracleComparison o;
  o.M1 = r.M1;
  o.M2 = r.M2;
  o.err_var = r.err_var;
  o.closed_form = min_error(direction, topology, zeta1, Gamma1T, n_in);
  o.residual = std::max({std::abs(r.M1 - 1.0), std::abs(r.M2 - 1.0),
                         std::abs(r.err_var / o.closed_form - 1.0)});
  o.measurement_commutator = r.measurement_commutator;
  o.bins = r.bins;
  return o;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(options.seed ^ 0x5eed5eedULL);

  // Closed forms through the quadrature engine.
  {
    CheckResult c{"closed_form_quadrature", true, false, 0.0, 1e-6, ""};
    struct Point { Direction d; Topology t; double z; double g; };
    const Point pts[] = {{Direction::teleport_2_to_1, Topology::sequential, -1.0, 1.0},
                         {Direction::teleport_2_to_1, Topology::sequential, -0.5, 4.0},
                         {Direction::direct_1_to_2, Topology::sequential, 0.5, 2.0},
                         {Direction::teleport_2_to_1, Topology::parallel, -0.5, 2.0}};
    for (const Point& p : pts) {
      InteractionSpec spec;
      spec.zeta1 = p.z;
      spec.zeta2 = -p.z;
      spec.gamma_ref = p.g;
      spec.direction = p.d;
      spec.topology = p.t;
      const OptimalProtocol o = optimal_protocol(spec);
      const TransferReport r = evaluate_protocol(spec, o.filter, o.s1, o.s2);
      const double rel = std::abs(r.err_var / min_error(p.d, p.t, p.z, p.g) - 1.0);
      c.value = std::max({c.value, rel, std::abs(r.M1 - 1.0), std::abs(r.M2 - 1.0)});
    }
    c.passed = c.value <= c.tolerance;
    c.detail = "max relative deviation over 4 optimal configurations";
    out.push_back(c);
  }

  // Commutator identities for random filters and schedules.
  for (Direction d : {Direction::teleport_2_to_1, Direction::direct_1_to_2}) {
    CheckResult c{std::string("identities_") + std::string(to_string(d)), true, false, 0.0, 1e-8,
                  ""};
    for (int i = 0; i < options.identity_cases; ++i) {
      const IdentityCase ic = random_identity_case(rng, d);
      const double r = identity_residual(ic);
      if (!(r <= c.value)) {
        c.value = std::isnan(r) ? INFINITY : r;
        c.detail = "worst: " + ic.description;
      }
    }
    c.passed = c.value <= c.tolerance;
    out.push_back(c);
  }
  {
    CheckResult c{"identities_unconditional", true, false, 0.0, 1e-8, ""};
    for (int i = 0; i < options.identity_cases; ++i) {
      std::string desc;
      const double r = random_unconditional_residual(rng, &desc);
      if (!(r <= c.value)) {
        c.value = std::isnan(r) ? INFINITY : r;
        c.detail = "worst: " + desc;
      }
    }
    c.passed = c.value <= c.tolerance;
    out.push_back(c);
  }

  // Binsim against the closed forms, with a convergence check at 2N.
  BinSimOptions bo;
  bo.bins = options.bins;
  bo.record_imbalance = options.record_imbalance;
  {
    struct Point { Direction d; Topology t; double z; double g; const char* name; };
    const Point pts[] = {
        {Direction::teleport_2_to_1, Topology::sequential, -1.0, 1.0, "teleport"},
        {Direction::direct_1_to_2, Topology::sequential, 1.0, 1.0, "direct"},
        {Direction::teleport_2_to_1, Topology::parallel, -0.5, 2.0, "parallel"}};
    CheckResult comm{"binsim_measurement_commutator", true, false, 0.0, 1e-8, ""};
    for (const Point& p : pts) {
      CheckResult c{std::string("binsim_oracle_") + p.name, true, false, 0.0, 1e-3, ""};
      const OracleComparison a = binsim_oracle(p.d, p.t, p.z, 0.5, p.g, bo);
      comm.value = std::max(comm.value, a.measurement_commutator);
      BinSimOptions fine = bo;
      fine.bins = 2 * bo.bins;
      const OracleComparison b = binsim_oracle(p.d, p.t, p.z, 0.5, p.g, fine);
      c.value = a.residual;
      const double err_rel = std::abs(a.err_var / a.closed_form - 1.0);
      c.detail = fmt("N=%g residual, error relative deviation %.3g, residual ratio N->2N %.3g",
                     double(bo.bins), err_rel, a.residual / std::max(b.residual, 1e-300));
      // Discretization error is a property of the grid, not a defect.
      if (a.residual > c.tolerance || err_rel > 1e-2) {
        c.warning = true;
        c.detail += "; grid too coarse for the 1e-3 / 1% tolerance, increase bins";
      }
      // Second order once resolved: the N->2N ratio should sit near 4.
      const double ratio = a.residual / std::max(b.residual, 1e-300);
      if (a.residual > 1e-9 && (ratio < 2.0 * std::sqrt(2.0) || ratio > 4.0 * std::sqrt(2.0))) {
        c.warning = true;
        c.detail += fmt("; observed order %.2f, grid not in the asymptotic regime",
                        std::log2(ratio));
      }
      if (a.residual > 1e-6 && b.residual > 0.9 * a.residual) {
        c.passed = false;
        c.detail += "; residual does not decrease when N doubles";
      }
      out.push_back(c);
    }
    comm.passed = comm.value <= comm.tolerance;
    comm.detail = "|[M, M^dag]| relative to |M|^2";
    out.push_back(comm);
  }

  // Thermal scaling in binsim.
  {
    CheckResult c{"binsim_thermal_scaling", true, false, 0.0, 1e-8, ""};
    const OracleComparison v = binsim_oracle(Direction::teleport_2_to_1, Topology::sequential,
                                             -0.5, 0.5, 2.0, bo, 0.0);
    for (double n : {1.0, 2.0}) {
      const OracleComparison t = binsim_oracle(Direction::teleport_2_to_1,
                                               Topology::sequential, -0.5, 0.5, 2.0, bo, n);
      c.value = std::max(c.value, std::abs(t.err_var / ((2 * n + 1) * v.err_var) - 1.0));
    }
    c.passed = c.value <= c.tolerance;
    c.detail = "n_in in {1, 2} against (2 n_in + 1) x vacuum";
    out.push_back(c);
  }

  // Monte-Carlo trajectories against the binsim moments on the same grid.
  {
    InteractionSpec spec;
    spec.zeta1 = -1.0;
    spec.zeta2 = 0.5;
    TrajectoryConfig tc = optimal_trajectory_config(spec);
    tc.trials = options.trials;
    tc.batches = std::min(options.batches, options.trials);
    tc.seed = options.seed;
    tc.bins = bo;
    const FidelityEstimate e = estimate_fidelity(tc, options.threads);
    const BinSimReport b = simulate_protocol(tc.spec, tc.filter, tc.s1, tc.s2, tc.aux, bo);
    const double F = fidelity_from_error(b.err_var);

    CheckResult cf{"monte_carlo_fidelity", true, false, std::abs(e.F - F), 3.0 * e.F_stderr, ""};
    cf.passed = cf.value <= cf.tolerance;
    cf.detail = fmt("F_mc=%.5f, F_binsim=%.5f, stderr %.2g", e.F, F, e.F_stderr);
    out.push_back(cf);

    CheckResult cv{"monte_carlo_var_M", true, false, std::abs(e.var_M - b.var_M),
                   3.0 * e.var_M_stderr, ""};
    cv.passed = cv.value <= cv.tolerance;
    cv.detail = fmt("var_mc=%.5g, var_binsim=%.5g, stderr %.2g", e.var_M, b.var_M,
                    e.var_M_stderr);
    out.push_back(cv);

    const Eigen::Vector2d dm = e.aligned_mean - e.expected_mean;
    CheckResult cm{"monte_carlo_mean", true, false,
                   std::max(std::abs(dm[0]) / e.aligned_mean_stderr[0],
                            std::abs(dm[1]) / e.aligned_mean_stderr[1]),
                   3.0, ""};
    cm.passed = cm.value <= cm.tolerance;
    cm.detail = "largest deviation of the aligned target mean, in stderr";
    out.push_back(cm);

    CheckResult cp{"covariance_psd", e.min_uncertainty_margin >= -1e-9, false,
                   e.min_uncertainty_margin, -1e-9, "smallest eigenvalue of cov + i Omega / 2"};
    out.push_back(cp);
  }
  return out;
}

}  // namespace pretro
