// Acceptance suite: one PASS/FAIL line per criterion. Exit status is zero
// when the set of failing criteria equals the --expect-fail set.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pretro/binsim.hpp"
#include "pretro/errors.hpp"
#include "pretro/quadrature.hpp"
#include "pretro/schedules.hpp"
#include "pretro/trajectories.hpp"
#include "pretro/unconditional.hpp"
#include "pretro/verification.hpp"

using namespace pretro;

namespace {

struct Outcome {
  std::string id;
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double x, double ref) { return std::abs(x / ref - 1.0); }

struct Point {
  Direction d;
  Topology topo;
  double zeta1;
  double GT;
  std::string label() const {
    return fmt("%s/%s zeta1=%g G1T=%g", std::string(to_string(d)).c_str(),
               std::string(to_string(topo)).c_str(), zeta1, GT);
  }
};

std::vector<Point> protocol_grid() {
  std::vector<Point> pts;
  for (double g : {0.5, 1.0, 2.0, 4.0}) {
    for (double z : {-1.0, -0.5}) pts.push_back({Direction::teleport_2_to_1, Topology::sequential, z, g});
    for (double z : {0.5, 1.0}) pts.push_back({Direction::direct_1_to_2, Topology::sequential, z, g});
    for (double z : {-1.0, -0.5}) pts.push_back({Direction::teleport_2_to_1, Topology::parallel, z, g});
  }
  return pts;
}

InteractionSpec spec_for(const Point& p, double n_in = 0.0) {
  InteractionSpec s;
  s.zeta1 = p.zeta1;
  s.zeta2 = -p.zeta1;
  s.gamma_ref = p.GT;
  s.direction = p.d;
  s.topology = p.topo;
  s.n_in = n_in;
  return s;
}

BinSimOptions bins(int n) {
  BinSimOptions o;
  o.bins = n;
  return o;
}

// --- criteria ------------------------------------------------------------------

Outcome closed_forms() {
  double worst = 0.0, slowest = 0.0;
  std::string where;
  for (const Point& p : protocol_grid()) {
    const auto t0 = std::chrono::steady_clock::now();
    const InteractionSpec spec = spec_for(p);
    const OptimalProtocol o = optimal_protocol(spec);
    const TransferReport r = evaluate_protocol(spec, o.filter, o.s1, o.s2);
    slowest = std::max(slowest, seconds_since(t0));
    const double dev = std::max({rel(r.err_var, min_error(p.d, p.topo, p.zeta1, p.GT)),
                                 std::abs(r.M1 - 1.0), std::abs(r.M2 - 1.0)});
    if (dev >= worst) {
      worst = dev;
      where = p.label();
    }
  }
  return {"1", worst <= 1e-6 && slowest < 1.0,
          fmt("worst deviation %.2e at %s (tol 1e-6); slowest point %.3f s (limit 1 s)", worst,
              where.c_str(), slowest)};
}

struct OracleSweep {
  double worst_M = 0.0, worst_err = 0.0, worst_ratio = INFINITY, slowest = 0.0;
  double worst_commutator = 0.0;
};

OracleSweep oracle_sweep() {
  OracleSweep s;
  for (const Point& p : protocol_grid()) {
    const auto t0 = std::chrono::steady_clock::now();
    const OracleComparison a = binsim_oracle(p.d, p.topo, p.zeta1, -p.zeta1, p.GT, bins(4000));
    s.slowest = std::max(s.slowest, seconds_since(t0));
    const OracleComparison b = binsim_oracle(p.d, p.topo, p.zeta1, -p.zeta1, p.GT, bins(8000));
    s.worst_M = std::max({s.worst_M, std::abs(a.M1 - 1.0), std::abs(a.M2 - 1.0)});
    s.worst_err = std::max(s.worst_err, rel(a.err_var, a.closed_form));
    s.worst_ratio = std::min(s.worst_ratio, a.residual / b.residual);
    s.worst_commutator = std::max(s.worst_commutator, a.measurement_commutator);
  }
  return s;
}

Outcome oracle_equivalence(const OracleSweep& s) {
  const bool ok = s.worst_M <= 1e-3 && s.worst_err <= 1e-2 && s.worst_ratio >= 2.0 && s.slowest < 30.0;
  return {"2", ok,
          fmt("N=4000: max |M-1| %.2e (tol 1e-3), max error deviation %.2e (tol 1e-2); smallest "
              "residual ratio N->2N %.2f (min 2); slowest point %.2f s (limit 30 s)",
              s.worst_M, s.worst_err, s.worst_ratio, s.slowest)};
}

Outcome identities(const OracleSweep& s) {
  std::mt19937_64 rng(2024);
  double tele = 0.0, dir = 0.0, unc = 0.0;
  for (int i = 0; i < 100; ++i) tele = std::max(tele, identity_residual(random_identity_case(rng, Direction::teleport_2_to_1)));
  for (int i = 0; i < 100; ++i) dir = std::max(dir, identity_residual(random_identity_case(rng, Direction::direct_1_to_2)));
  for (int i = 0; i < 100; ++i) unc = std::max(unc, random_unconditional_residual(rng));
  const bool ok = std::max({tele, dir, unc, s.worst_commutator}) < 1e-8;
  return {"3", ok,
          fmt("worst residual over 100 cases: teleport %.2e, direct %.2e, unconditional %.2e; "
              "binsim [M, M^dag] %.2e (tol 1e-8)",
              tele, dir, unc, s.worst_commutator)};
}

std::vector<Outcome> error_curves() {
  using nlohmann::json;
  std::vector<Outcome> out;

  const pretrodict::RunConfig ideal = pretrodict::parse_config(
      {{"sweep", {{"zeta1", {-1.0, -0.5, -0.25, 0.0}}, {"min", 0.5}, {"max", 10.0}, {"points", 20}}},
       {"engine", {{"r_max", json::array()}}}});
  const std::vector<pretrodict::ErrorCurveRow> rows = pretrodict::error_curve_rows(ideal, 1);

  double worst_zero = 0.0;
  for (const auto& r : rows)
    if (r.zeta1 == 0.0) worst_zero = std::max(worst_zero, rel(r.error_ideal, 1.0 / (2.0 * r.Gamma1_T)));
  out.push_back({"4a", worst_zero <= 1e-3,
                 fmt("zeta1=0 curve vs 1/(2 G1T): worst relative deviation %.2e (tol 1e-3)", worst_zero)});

  // Log-slope between the two largest strengths of each curve.
  std::string slopes;
  double worst_slope = 0.0;
  for (double z : {-1.0, -0.5, -0.25}) {
    const pretrodict::ErrorCurveRow* a = nullptr;
    const pretrodict::ErrorCurveRow* b = nullptr;
    for (const auto& r : rows)
      if (r.zeta1 == z) {
        a = b;
        b = &r;
      }
    const double slope = std::log(b->error_ideal / a->error_ideal) / (b->Gamma1_T - a->Gamma1_T);
    const double dev = rel(slope, -2.0 * std::abs(z));
    worst_slope = std::max(worst_slope, dev);
    slopes += fmt(" zeta1=%g: %.4f vs %.4f;", z, slope, -2.0 * std::abs(z));
  }
  out.push_back({"4b", worst_slope <= 0.05,
                 fmt("asymptotic log-slope per unit G1T:%s worst deviation %.2e (tol 5e-2)",
                     slopes.c_str(), worst_slope)});

  const pretrodict::RunConfig capped = pretrodict::parse_config(
      {{"sweep", {{"zeta1", {-1.0, -0.5, -0.25}}, {"min", 0.5}, {"max", 4.0}, {"points", 4}}},
       {"engine", {{"r_max", {10.0, 100.0}}}}});
  const std::vector<pretrodict::ErrorCurveRow> trunc = pretrodict::error_curve_rows(capped, 1);
  int missing = 0, below = 0, diverging = 0;
  std::string at4;
  bool within = true;
  for (const auto& r : trunc) {
    for (double e : r.error_truncated) {
      if (std::isnan(e)) ++missing;
      // The retuned exponent solves M1 = M2 to 1e-8, which bounds how far
      // a capped error can dip under the ideal one.
      else if (e < r.error_ideal * (1 - 1e-6)) ++below;
    }
    const double e10 = r.error_truncated[0], e100 = r.error_truncated[1];
    if (!std::isnan(e10) && !std::isnan(e100) && e100 > e10) ++diverging;
    if (std::abs(r.Gamma1_T - 4.0) < 1e-9) {
      const double excess = std::isnan(e100) ? NAN : e100 / r.error_ideal - 1.0;
      if (!(excess <= 0.1)) within = false;
      at4 += std::isnan(excess) ? fmt(" zeta1=%g: none;", r.zeta1)
                                : fmt(" zeta1=%g: %+.1f%%;", r.zeta1, 100 * excess);
    }
  }
  out.push_back({"4c", missing == 0 && below == 0 && diverging == 0 && within,
                 fmt("%d of %zu capped points have no retuned schedule, %d below ideal by more than 1e-6, %d not "
                     "converging; r_max=100 excess at G1T=4:%s (tol 10%%)",
                     missing, 2 * trunc.size(), below, diverging, at4.c_str())});
  return out;
}

Outcome unconditional() {
  double worst_diag = 0.0;
  for (double z : {0.25, 0.5, 0.75, 1.0})
    worst_diag = std::max(worst_diag, std::abs(uncond_protocol(z, z, 20.0, 1.0).F_uc - 1.0));

  // Teleportation without the record: b1(T) lies upstream of oscillator 2,
  // so the source never reaches it and only amplified noise remains.
  double source_coeff = 0.0, F = 1.0;
  bool falling = true;
  for (double GT : {1.0, 2.0, 4.0}) {
    InteractionSpec s;
    s.zeta1 = -1.0;
    s.zeta2 = 1.0;
    s.gamma_ref = GT;
    const Propagation p = propagate(s, RateSchedule::constant(GT, 1.0),
                                    RateSchedule::optimal_teleport(-1.0, GT, 1.0), bins(1000));
    source_coeff = std::max({source_coeff, std::abs(p.b1_final[ModeLayout::b2()]),
                             std::abs(p.b1_final[ModeLayout::b2() + 1])});
    ModeExpansion eps = p.b1_final;
    eps.coefficients()[ModeLayout::b2()] += 1.0;
    const double f = fidelity_from_error(variance(eps));
    falling = falling && f < F;
    F = f;
  }

  int losses = 0;
  for (double G = 2.0; G <= 20.0 + 1e-9; G += 0.5)
    if (!(min_error(Direction::direct_1_to_2, Topology::sequential, 0.5, G) <
          uncond_protocol(0.5, 0.5, G, 1.0).err_total))
      ++losses;

  const bool ok = worst_diag <= 1e-3 && source_coeff == 0.0 && falling && F < 1e-3 && losses == 0;
  return {"5", ok,
          fmt("diagonal |F_uc-1| max %.2e (tol 1e-3); teleport source coefficient %.1e, F_uc at "
              "zeta1=-1 G1T=4 %.2e; conditional >= unconditional at %d of 37 strengths",
              worst_diag, source_coeff, F, losses)};
}

Outcome thermal() {
  double closed = 0.0, quad = 0.0, sim = 0.0;
  for (const Point& p : protocol_grid()) {
    const InteractionSpec v = spec_for(p);
    const OptimalProtocol o = optimal_protocol(v);
    const double qv = evaluate_protocol(v, o.filter, o.s1, o.s2).err_var;
    const double bv = binsim_oracle(p.d, p.topo, p.zeta1, -p.zeta1, p.GT, bins(500)).err_var;
    for (double n : {1.0, 2.0}) {
      const double k = 2 * n + 1;
      closed = std::max(closed, rel(min_error(p.d, p.topo, p.zeta1, p.GT, n),
                                    k * min_error(p.d, p.topo, p.zeta1, p.GT)));
      quad = std::max(quad, rel(evaluate_protocol(spec_for(p, n), o.filter, o.s1, o.s2).err_var, k * qv));
      sim = std::max(sim, rel(binsim_oracle(p.d, p.topo, p.zeta1, -p.zeta1, p.GT, bins(500), n).err_var, k * bv));
    }
  }
  return {"6", std::max({closed, quad, sim}) <= 1e-8,
          fmt("worst deviation from (2n+1) x vacuum: closed form %.1e, quadrature %.1e, binsim "
              "%.1e (tol 1e-8)",
              closed, quad, sim)};
}

Outcome monte_carlo() {
  const auto t0 = std::chrono::steady_clock::now();
  InteractionSpec spec;
  spec.zeta1 = -1.0;
  spec.zeta2 = 0.5;
  spec.gamma_ref = 1.0;
  TrajectoryConfig c = optimal_trajectory_config(spec);
  c.source = OscillatorInput::coherent({1.0, 0.5});
  c.trials = 2000;
  c.batches = 20;
  c.seed = 0;
  const FidelityEstimate e = estimate_fidelity(c, 1);
  const double elapsed = seconds_since(t0);
  const double F = 1.0 / (1.0 + 1.0 / (std::exp(2.0) - 1.0));
  const double zF = std::abs(e.F - F) / e.F_stderr;
  const double zx = std::abs(e.aligned_mean[0] - e.expected_mean[0]) / e.aligned_mean_stderr[0];
  const double zp = std::abs(e.aligned_mean[1] - e.expected_mean[1]) / e.aligned_mean_stderr[1];
  return {"7", zF <= 3 && zx <= 3 && zp <= 3 && elapsed < 120.0,
          fmt("F = %.5f +- %.5f vs %.5f (%.2f stderr); mean (%.4f, %.4f) vs (%.4f, %.4f) "
              "(%.2f, %.2f stderr); %.1f s (limit 120 s)",
              e.F, e.F_stderr, F, zF, e.aligned_mean[0], e.aligned_mean[1], e.expected_mean[0],
              e.expected_mean[1], zx, zp, elapsed)};
}

Outcome jahne() {
  const double G2 = 10.0, T = 1.0;
  double worst = 0.0;
  int samples = 0;
  for (double t = T - 5.0 / G2; t < T; t += 0.001) {
    const RateSample j = gamma1_jahne(t, G2, T), u = gamma1_unconditional(t, 1.0, G2, T);
    if (j.saturated || u.saturated) continue;
    worst = std::max(worst, rel(j.value, u.value));
    ++samples;
  }
  return {"8", worst <= 0.1,
          fmt("worst relative gap over %d samples with t >= T - 5/G2: %.2e (tol 0.1)", samples, worst)};
}

std::vector<Outcome> negative_controls() {
  double smallest_break = INFINITY, worst_identity = 0.0;
  for (const Point& p : protocol_grid()) {
    if (p.topo != Topology::sequential) continue;
    const InteractionSpec spec = spec_for(p);
    const OptimalProtocol o = optimal_protocol(spec);
    const FilterSpec f = o.filter;
    const FilterSpec bent = FilterSpec::custom(
        [f](const Instant& at) { return f(at) * (1.0 + 0.01 * std::cos(M_PI * at.t)); }, 1.0);
    const TransferReport r = evaluate_protocol(spec, bent, o.s1, o.s2);
    const double dev = std::max({rel(r.err_var, min_error(p.d, p.topo, p.zeta1, p.GT)),
                                 std::abs(r.M1 - 1.0), std::abs(r.M2 - 1.0)});
    smallest_break = std::min(smallest_break, dev);
    worst_identity = std::max(worst_identity, r.residuals.max());
  }
  std::vector<Outcome> out;
  out.push_back({"9", smallest_break > 1e-5 && worst_identity < 1e-8,
                 fmt("1%% filter distortion: smallest closed-form deviation %.2e (must exceed "
                     "1e-5); worst identity residual %.2e (tol 1e-8)",
                     smallest_break, worst_identity)});

  // A broken record model, unlike a bad filter, does break normality of M.
  InteractionSpec s;
  s.zeta1 = -1.0;
  s.zeta2 = 0.5;
  BinSimOptions o = bins(1000);
  o.record_imbalance = 0.01;
  const FilterSpec raw = FilterSpec::raw(s.direction, -1.0, 0.5, 1.0, 1.0);
  const MeasuredProtocol m = measurement_operator(s, raw, RateSchedule::constant(1.0, 1.0),
                                                  RateSchedule::optimal_teleport(-1.0, 1.0, 1.0),
                                                  std::nullopt, o);
  const double c = std::abs(commutator(m.M, m.M.adjoint())) / m.M.coefficients().squaredNorm();
  out.push_back({"9b", c > 1e-8,
                 fmt("1%% record sideband imbalance: |[M, M^dag]| / |M|^2 = %.2e (must exceed 1e-8)", c)});
  return out;
}

std::set<std::string> split(const std::vector<std::string>& items) {
  std::set<std::string> s;
  for (const std::string& item : items) {
    std::stringstream ss(item);
    for (std::string tok; std::getline(ss, tok, ',');)
      if (!tok.empty()) s.insert(tok);
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> expect_fail, only;
  app.add_option("--expect-fail", expect_fail, "criteria known to fail (comma separated)");
  app.add_option("--only", only, "run only these criteria (1-9, comma separated)");
  CLI11_PARSE(app, argc, argv);
  const std::set<std::string> expected = split(expect_fail), selected = split(only);
  const auto want = [&](const char* id) { return selected.empty() || selected.count(id) > 0; };

  std::vector<Outcome> outcomes;
  const auto record = [&](Outcome o) {
    const bool tolerated = !o.passed && expected.count(o.id) > 0;
    std::cout << (o.passed ? "PASS " : "FAIL ") << o.id << "  " << o.detail
              << (tolerated ? "  [expected failure]" : "") << std::endl;
    outcomes.push_back(std::move(o));
  };
  const auto guarded = [&](const char* id, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      record({id, false, std::string("exception: ") + e.what()});
    }
  };

  if (want("1")) guarded("1", [&] { record(closed_forms()); });
  if (want("2") || want("3")) {
    guarded("2", [&] {
      const OracleSweep s = oracle_sweep();
      if (want("2")) record(oracle_equivalence(s));
      if (want("3")) record(identities(s));
    });
  }
  if (want("4")) guarded("4", [&] { for (Outcome& o : error_curves()) record(std::move(o)); });
  if (want("5")) guarded("5", [&] { record(unconditional()); });
  if (want("6")) guarded("6", [&] { record(thermal()); });
  if (want("7")) guarded("7", [&] { record(monte_carlo()); });
  if (want("8")) guarded("8", [&] { record(jahne()); });
  if (want("9")) guarded("9", [&] { for (Outcome& o : negative_controls()) record(std::move(o)); });

  std::set<std::string> failed;
  for (const Outcome& o : outcomes)
    if (!o.passed) failed.insert(o.id);
  std::set<std::string> relevant;
  for (const std::string& id : expected)
    for (const Outcome& o : outcomes)
      if (o.id == id) relevant.insert(id);
  const bool ok = failed == relevant;
  std::cout << (ok ? "acceptance: outcome matches expectations" : "acceptance: unexpected outcome")
            << " (" << outcomes.size() - failed.size() << " passed, " << failed.size() << " failed)"
            << std::endl;
  return ok ? 0 : 1;
}
