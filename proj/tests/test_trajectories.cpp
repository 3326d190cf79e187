#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pretro/errors.hpp"
#include "pretro/trajectories.hpp"

using namespace pretro;
using doctest::Approx;

namespace {

BinRates single_bin(double G1, double G2, double dt = 0.01) {
  BinRates b;
  b.start = {0.0, 1.0};
  b.stop = {dt, 1.0 - dt};
  b.dt = dt;
  b.Gamma1 = G1;
  b.Gamma2 = G2;
  return b;
}

TrajectoryConfig teleport_config(int trials, int bins) {
  InteractionSpec spec;
  spec.zeta1 = -1.0;
  spec.zeta2 = 0.5;
  spec.gamma_ref = 1.0;
  TrajectoryConfig c = optimal_trajectory_config(spec);
  c.trials = trials;
  c.batches = 20;
  c.seed = 11;
  c.bins.bins = bins;
  return c;
}

double sample_variance(const std::vector<double>& v) {
  double m = 0.0, s = 0.0;
  for (double x : v) m += x;
  m /= double(v.size());
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace

TEST_SUITE("trajectories") {
  TEST_CASE("uncoupled bin leaves the state alone") {
    const BinMap map = bin_map(0.4, -0.3, Topology::sequential, single_bin(0.0, 0.0));
    std::mt19937_64 rng(1);
    for (double n : {0.0, 1.0}) {
      std::vector<double> re, im;
      for (int k = 0; k < 20000; ++k) {
        GaussianState s;
        s.mean << 1.0, -0.5, 0.3, 0.2;
        const GaussianState before = s;
        const RecordSample r = step(s, map, n, rng);
        CHECK((s.mean - before.mean).norm() == 0.0);
        CHECK((s.cov - before.cov).norm() == 0.0);
        re.push_back(r.m.real());
        im.push_back(r.m.imag());
      }
      // Re m and Im m share the symmetrized record variance equally.
      CHECK(sample_variance(re) + sample_variance(im) == Approx((2 * n + 1) / 2).epsilon(0.03));
    }
  }

  TEST_CASE("balanced coupling heats unconditionally and stays pure when conditioned") {
    // The complex record reads both quadratures, so back-action on one is
    // matched by information on the other and a coherent state stays coherent.
    const double G = 2.0, dt = 0.05;
    const BinMap map = bin_map(0.0, 0.0, Topology::sequential, single_bin(G, 0.0, dt));
    std::mt19937_64 rng(2);
    GaussianState s;
    Eigen::Matrix4d open = s.cov;
    double prev = 0.5;
    for (int k = 0; k < 20; ++k) {
      step(s, map, 0.0, rng);
      open = map.system * open * map.system.transpose() +
             0.5 * map.system_noise * map.system_noise.transpose();
      CHECK(open(0, 0) > prev);
      prev = open(0, 0);
    }
    CHECK((s.cov - 0.5 * Eigen::Matrix4d::Identity()).norm() < 1e-12);
    CHECK(open(0, 0) == Approx(open(1, 1)));

    InteractionSpec spec;
    spec.zeta1 = 0.0;
    spec.zeta2 = 0.0;
    BinSimOptions o;
    o.bins = 20;
    const Propagation p = propagate(spec, RateSchedule::constant(G, 1.0),
                                    RateSchedule::constant(0.0, 1.0), o);
    CHECK(variance(p.b1_final.quadrature(0.0)) == Approx(open(0, 0)).epsilon(1e-12));
  }

  TEST_CASE("vacuum inputs give zero-mean outcomes") {
    TrajectoryConfig c = teleport_config(1000, 400);
    c.source = OscillatorInput::coherent(0.0);
    const FidelityEstimate e = estimate_fidelity(c);
    double Mre = 0.0, Mim = 0.0;
    for (const TrialResult& t : e.trials) {
      Mre += t.M.real();
      Mim += t.M.imag();
    }
    const double se = std::sqrt(e.var_M / 2.0 / double(e.trials.size()));
    CHECK(std::abs(Mre / 1000.0) < 4 * se);
    CHECK(std::abs(Mim / 1000.0) < 4 * se);
    CHECK(std::abs(e.aligned_mean[0]) < 3 * e.aligned_mean_stderr[0]);
    CHECK(std::abs(e.aligned_mean[1]) < 3 * e.aligned_mean_stderr[1]);
  }

  TEST_CASE("coherent source arrives with the right mean") {
    const cplx alpha{1.0, 0.5};
    TrajectoryConfig c = teleport_config(2000, 1000);
    c.source = OscillatorInput::coherent(alpha);
    const FidelityEstimate e = estimate_fidelity(c);
    CHECK(e.expected_mean[0] == Approx(std::sqrt(2.0) * alpha.real()));
    CHECK(e.expected_mean[1] == Approx(std::sqrt(2.0) * alpha.imag()));
    for (int k = 0; k < 2; ++k)
      CHECK(std::abs(e.aligned_mean[k] - e.expected_mean[k]) < 3 * e.aligned_mean_stderr[k]);
  }

  TEST_CASE("fidelity matches the optimal teleportation bound") {
    const TrajectoryConfig c = teleport_config(2000, 1000);
    const FidelityEstimate e = estimate_fidelity(c);
    const double F = 1.0 - std::exp(-2.0);
    MESSAGE("F_mc " << e.F << " +- " << e.F_stderr);
    CHECK(std::abs(e.F - F) < 3 * e.F_stderr);
    CHECK(e.min_uncertainty_margin > -1e-9);

    const BinSimReport b = simulate_protocol(c.spec, c.filter, c.s1, c.s2, c.aux, c.bins);
    CHECK(std::abs(e.var_M - b.var_M) < 3 * e.var_M_stderr);

    TrajectoryConfig off = c;
    off.filter = FilterSpec::custom([](double) { return 0.0; });
    CHECK(estimate_fidelity(off).excess > e.excess + 5 * e.excess_stderr);
  }

  TEST_CASE("thermal noise everywhere triples the excess") {
    const TrajectoryConfig c = teleport_config(2000, 1000);
    const BinSimReport v = simulate_protocol(c.spec, c.filter, c.s1, c.s2, c.aux, c.bins);
    TrajectoryConfig hot = c;
    hot.spec.n_in = 1.0;
    hot.target = OscillatorInput::thermal(1.0);
    const FidelityEstimate e = estimate_fidelity(hot);
    MESSAGE("hot excess " << e.excess << " +- " << e.excess_stderr << ", vacuum " << v.err_var);
    CHECK(std::abs(e.excess - 3 * v.err_var) < 3 * e.excess_stderr);
  }

  TEST_CASE("excess does not depend on the source amplitude") {
    TrajectoryConfig a = teleport_config(1000, 400), b = a;
    a.source = OscillatorInput::coherent(0.0);
    b.source = OscillatorInput::coherent({2.0, 0.0});
    const FidelityEstimate ea = estimate_fidelity(a), eb = estimate_fidelity(b);
    // Identical seeds: the noise realisations coincide and only the mean
    // shifts, up to the grid error in the transfer coefficient.
    CHECK(eb.excess == Approx(ea.excess).epsilon(1e-4));
    CHECK(eb.target_covariance.isApprox(ea.target_covariance, 1e-12));
  }

  TEST_CASE("thread count does not change the result") {
    const TrajectoryConfig c = teleport_config(300, 200);
    const FidelityEstimate one = estimate_fidelity(c, 1), four = estimate_fidelity(c, 4);
    REQUIRE(one.trials.size() == four.trials.size());
    for (std::size_t i = 0; i < one.trials.size(); ++i) {
      CHECK(one.trials[i].M == four.trials[i].M);
      CHECK(one.trials[i].excess == four.trials[i].excess);
    }
    CHECK(one.F == four.F);
  }

  TEST_CASE("parallel and direct plans") {
    InteractionSpec par;
    par.zeta1 = -0.5;
    par.topology = Topology::parallel;
    par.gamma_ref = 2.0;
    TrajectoryConfig p = optimal_trajectory_config(par);
    CHECK(p.spec.zeta2 == 0.5);
    REQUIRE(p.aux.has_value());
    p.trials = 1000;
    p.bins.bins = 600;
    p.seed = 4;
    const FidelityEstimate ep = estimate_fidelity(p);
    const BinSimReport bp = simulate_protocol(p.spec, p.filter, p.s1, p.s2, p.aux, p.bins);
    CHECK(std::abs(ep.F - fidelity_from_error(bp.err_var)) < 3 * ep.F_stderr);

    InteractionSpec dir;
    dir.zeta1 = 0.5;
    dir.zeta2 = 0.7;
    dir.direction = Direction::direct_1_to_2;
    dir.gamma_ref = 2.0;
    TrajectoryConfig d = optimal_trajectory_config(dir);
    CHECK(d.spec.zeta2 == 0.0);
    d.trials = 1000;
    d.bins.bins = 600;
    const FidelityEstimate ed = estimate_fidelity(d);
    const BinSimReport bd = simulate_protocol(d.spec, d.filter, d.s1, d.s2, d.aux, d.bins);
    CHECK(std::abs(ed.F - fidelity_from_error(bd.err_var)) < 3 * ed.F_stderr);

    dir.topology = Topology::parallel;
    CHECK_THROWS_AS(optimal_trajectory_config(dir), UnsupportedParameter);
  }

  TEST_CASE("covariance validation") {
    GaussianState s;
    CHECK_NOTHROW(s.validate());
    CHECK(s.uncertainty_margin() == Approx(0.0).epsilon(1e-12));
    s.cov(0, 0) = 0.1;
    s.cov(1, 1) = 0.1;
    CHECK(s.uncertainty_margin() < 0.0);
    CHECK_THROWS_AS(s.validate(), StabilityError);
    GaussianState t;
    t.cov(0, 1) = 0.2;
    CHECK_THROWS_AS(t.validate(), StabilityError);
  }

  TEST_CASE("batch means") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i % 2;
    const BatchMean b = batch_mean(v, 10);
    CHECK(b.mean == Approx(0.5));
    CHECK(b.stderr_ == Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(batch_mean(v, 1), DomainError);
    CHECK_THROWS_AS(batch_mean(v, 101), DomainError);
  }

  TEST_CASE("trajectory seeds are distinct") {
    CHECK(trajectory_seed(0, 0) != trajectory_seed(0, 1));
    CHECK(trajectory_seed(0, 1) != trajectory_seed(1, 0));
    CHECK(trajectory_seed(7, 3) == trajectory_seed(7, 3));
  }
}
