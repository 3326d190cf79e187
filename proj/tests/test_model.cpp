#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pretro/errors.hpp"
#include "pretro/model.hpp"
#include "pretro/schedules.hpp"

using namespace pretro;

TEST_SUITE("model") {
  TEST_CASE("coupling amplitudes from rates") {
    CouplingParams c = coupling_from_rates(2.0, 1.0);
    CHECK(c.mu == doctest::Approx(2.0));
    CHECK(c.nu == doctest::Approx(0.0));
    c = coupling_from_rates(2.0, -1.0);
    CHECK(c.mu == doctest::Approx(0.0));
    CHECK(c.nu == doctest::Approx(2.0));
    c = coupling_from_rates(0.5, 0.0);
    CHECK(c.mu == doctest::Approx(0.5));
    CHECK(c.nu == doctest::Approx(0.5));
    CHECK_THROWS_AS(coupling_from_rates(1.0, 1.5), DomainError);
    CHECK_THROWS_AS(coupling_from_rates(-1.0, 0.0), DomainError);
  }

  TEST_CASE("rates from coupling amplitudes") {
    RateParams r = rates_from_coupling(2.0, 0.0);
    CHECK(r.Gamma == doctest::Approx(2.0));
    CHECK(r.zeta == doctest::Approx(1.0));
    CHECK(r.gamma == doctest::Approx(4.0));
    r = rates_from_coupling(0.7, 0.7);
    CHECK(r.zeta == 0.0);
    CHECK(r.gamma == 0.0);
    r = rates_from_coupling(0.0, 2.0);
    CHECK(r.Gamma == doctest::Approx(2.0));
    CHECK(r.zeta == doctest::Approx(-1.0));
    CHECK(r.gamma == doctest::Approx(-4.0));
    r = rates_from_coupling(0.0, 0.0);
    CHECK(r.degenerate);
    CHECK(r.Gamma == 0.0);
    CHECK(r.gamma == 0.0);
  }

  TEST_CASE("rate and coupling round trip") {
    double worst = 0.0;
    for (double G = 0.01; G < 50.0; G *= 1.7)
      for (double z = -1.0; z <= 1.0; z += 0.125) {
        const CouplingParams c = coupling_from_rates(G, z);
        const RateParams r = rates_from_coupling(c.mu, c.nu);
        worst = std::max({worst, std::abs(r.Gamma / G - 1.0), std::abs(r.zeta - z)});
      }
    CHECK(worst < 1e-14);
  }

  TEST_CASE("interaction time") {
    const RateSchedule c = RateSchedule::constant(1.5, 2.0);
    for (double t : {0.0, 0.3, 1.1, 2.0}) CHECK(interaction_time(c, -0.4, t) == doctest::Approx(2 * -0.4 * 1.5 * t));

    const RateSchedule zero = RateSchedule::constant(0.0, 1.0);
    CHECK(interaction_time(zero, 0.7, 0.8) == 0.0);

    // Accumulated damping of the unconditional catching schedule.
    const double z = 0.5, G2 = 3.0, T = 1.0;
    const RateSchedule u = RateSchedule::unconditional(z, G2, T);
    for (double t : {0.1, 0.5, 0.9, 0.99}) {
      const double expected = -2.0 * z * G2 * t +
                              std::tanh(z * G2 * T) *
                                  std::log(std::sinh(z * G2 * (T + t)) / std::sinh(z * G2 * (T - t)));
      CHECK(interaction_time(u, z, t) == doctest::Approx(expected).epsilon(1e-10));
    }
    CHECK(interaction_time(u, z, 0.0) == 0.0);

    // Monotone for a constant-sign rate.
    double prev = 0.0;
    for (double t = 0.05; t < 1.0; t += 0.05) {
      const double tau = interaction_time(u, z, t);
      CHECK(tau > prev);
      prev = tau;
    }
  }

  TEST_CASE("time grid") {
    const TimeGrid g(2.5, 40);
    CHECK(g.weights().sum() == doctest::Approx(2.5));
    const Eigen::ArrayXd t = g.nodes();
    CHECK(t[0] > 0.0);
    CHECK(t[t.size() - 1] < 2.5);
    for (Eigen::Index k = 1; k < t.size(); ++k) CHECK(t[k] > t[k - 1]);
  }

  TEST_CASE("noise kernel") {
    const NoiseKernel k{1.5};
    for (double a : {-1.0, -0.3, 0.0, 0.6, 1.0})
      for (double b : {-1.0, -0.2, 0.4, 1.0}) {
        CHECK(NoiseKernel::commutator(a, b) == NoiseKernel::commutator(b, a));
        CHECK(k.correlation(a, b) == k.correlation(b, a));
        CHECK(k.correlation(a, b) >= 0.0);
      }
    CHECK(NoiseKernel::commutator(0.3, -0.3) == 0.0);
    CHECK(k.correlation(0.5, 0.5) == doctest::Approx(1.25 * 4.0));
  }

  TEST_CASE("interaction spec validation") {
    InteractionSpec s;
    CHECK_NOTHROW(s.validate());
    s.zeta1 = 1.2;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.zeta1 = -0.5;
    s.T = 0.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.T = 1.0;
    s.n_in = -0.1;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.n_in = 0.0;
    s.topology = Topology::parallel;
    s.direction = Direction::direct_1_to_2;
    CHECK_THROWS(s.validate());
    s.direction = Direction::teleport_2_to_1;
    s.zeta2 = 0.2;
    CHECK_NOTHROW(s.validate());
    CHECK_THROWS(s.validate(true));
    s.zeta2 = 0.5;
    CHECK_NOTHROW(s.validate(true));
  }
}
