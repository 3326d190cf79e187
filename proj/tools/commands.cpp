#include "commands.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "pretro/binsim.hpp"
#include "pretro/errors.hpp"
#include "pretro/quadrature.hpp"
#include "pretro/schedules.hpp"
#include "pretro/trajectories.hpp"
#include "pretro/unconditional.hpp"
#include "pretro/verification.hpp"

namespace pretrodict {

using nlohmann::json;
using pretro::Direction;
using pretro::FilterSpec;
using pretro::RateSchedule;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Evaluates fn(0..n-1) on a worker pool. Results land by index, so the
// caller collects them in input order. The lowest-index failure is rethrown.
template <class Result, class Fn>
std::vector<Result> ordered_map(std::size_t n, int threads, Fn fn) {
  std::vector<Result> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1, threads), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::ofstream open_output(const CommandContext& ctx, const std::string& name) {
  std::filesystem::create_directories(ctx.out_dir);
  const auto path = ctx.out_dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  return f;
}

void write_json(const CommandContext& ctx, const std::string& name, const json& doc) {
  std::ofstream f = open_output(ctx, name);
  f << doc.dump(2) << '\n';
}

void note(const CommandContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n';
}

// Rows end with CRLF per RFC 4180.
class CsvWriter {
 public:
  explicit CsvWriter(std::ofstream f) : f_(std::move(f)) {}
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) f_ << ',';
      f_ << quote(fields[i]);
    }
    f_ << "\r\n";
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + '"';
  }
  std::ofstream f_;
};

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

pretro::InteractionSpec spec_at(const RunConfig& config, double zeta1, double Gamma1T) {
  pretro::InteractionSpec s = config.protocol.spec();
  s.zeta1 = zeta1;
  s.gamma_ref = Gamma1T / s.T;
  return s;
}

}  // namespace

std::string csv_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- schedule

std::vector<ScheduleRow> schedule_rows(const RunConfig& config) {
  const ProtocolConfig& p = config.protocol;
  const double ref = p.gamma_ref, T = p.T;
  const Direction dir = p.direction;
  const double cap = p.r_max * ref;

  std::string kind = p.schedule;
  RateSchedule schedule = RateSchedule::constant(ref, T);
  std::optional<FilterSpec> filter;
  bool tail = false;
  if (p.schedule == "optimal") {
    kind = dir == Direction::teleport_2_to_1 ? "optimal_teleport" : "optimal_direct";
    schedule = dir == Direction::teleport_2_to_1
                   ? RateSchedule::optimal_teleport(p.zeta1, ref, T)
                   : RateSchedule::optimal_direct(p.zeta1, ref, T);
    filter = FilterSpec::raw(dir, p.zeta1, p.zeta2, ref, T);
  } else if (p.schedule == "unconditional") {
    schedule = RateSchedule::unconditional(p.zeta1, ref, T);
    tail = true;
  } else if (p.schedule == "jahne") {
    schedule = RateSchedule::jahne(ref, T);
    tail = true;
  } else if (p.schedule == "truncated") {
    const pretro::TruncatedSchedule ts =
        pretro::truncated_schedule(dir, p.zeta1, p.zeta2, ref, T, p.r_max);
    schedule = ts.schedule;
    filter = ts.filter;
  }
  const RateSchedule jahne = RateSchedule::jahne(ref, T);
  const RateSchedule beamsplitter = RateSchedule::unconditional(1.0, ref, T);

  const int n = config.engine.samples;
  std::vector<ScheduleRow> rows(n);
  for (int i = 0; i < n; ++i) {
    ScheduleRow& r = rows[i];
    // Exact endpoints: the remaining time is carried separately.
    const pretro::Instant at{T * i / (n - 1), T * (n - 1 - i) / (n - 1)};
    r.kind = kind;
    r.t_over_T = at.t / T;
    const pretro::RateSample s = schedule.sample(at);
    r.saturated = s.saturated;
    double g = s.value;
    if (!std::isfinite(g) || g > cap) {
      g = cap;
      r.saturated = true;
    }
    r.gamma_over_ref = g / ref;
    r.filter_times_sqrtT = kNaN;
    if (filter) {
      const double f = (*filter)(at) * std::sqrt(T);
      if (std::isfinite(f)) r.filter_times_sqrtT = f;
    }
    r.tail_ratio = kNaN;
    if (tail) {
      const double num = jahne(at), den = beamsplitter(at);
      if (std::isfinite(num) && std::isfinite(den) && den > 0.0) r.tail_ratio = num / den;
    }
  }
  return rows;
}

int cmd_schedule(const RunConfig& config, const CommandContext& ctx) {
  const std::vector<ScheduleRow> rows = schedule_rows(config);
  CsvWriter csv(open_output(ctx, "schedule.csv"));
  csv.row({"schema_version", "kind", "t_over_T", "Gamma_over_ref", "filter_times_sqrtT",
           "saturated", "tail_ratio"});
  const std::string v = std::to_string(kSchemaVersion);
  for (const ScheduleRow& r : rows)
    csv.row({v, r.kind, csv_number(r.t_over_T), csv_number(r.gamma_over_ref),
             csv_number(r.filter_times_sqrtT), r.saturated ? "1" : "0",
             csv_number(r.tail_ratio)});
  note(ctx, "schedule: " + std::to_string(rows.size()) + " rows of " + rows.front().kind);
  return kExitOk;
}

// ------------------------------------------------------------- error curve

std::vector<ErrorCurveRow> error_curve_rows(const RunConfig& config, int threads) {
  if (config.protocol.topology != pretro::Topology::sequential)
    throw pretro::UnsupportedParameter("error-curve covers the sequential topology");
  if (config.sweep.variable != "Gamma1_T")
    throw ConfigError("error-curve sweeps Gamma1_T");
  const std::vector<double> g = config.sweep.values();
  const std::vector<double>& z = config.sweep.zeta1;
  const std::vector<double>& caps = config.engine.r_max;
  const Direction dir = config.protocol.direction;
  const double T = config.protocol.T, n_in = config.protocol.n_in;

  // One task per (zeta1, Gamma1 T, r_max) so the slow root finds spread out.
  const std::size_t per_row = caps.size() + 1, rows = z.size() * g.size();
  struct Cell {
    double error = kNaN, alpha = kNaN;
  };
  const std::vector<Cell> cells =
      ordered_map<Cell>(rows * per_row, threads, [&](std::size_t task) {
        const std::size_t row = task / per_row, slot = task % per_row;
        const double zeta1 = z[row / g.size()], GT = g[row % g.size()];
        Cell c;
        if (slot == 0) {
          c.error = pretro::min_error(dir, pretro::Topology::sequential, zeta1, GT, n_in);
          return c;
        }
        if (zeta1 == 0.0) return c;
        const pretro::InteractionSpec spec = spec_at(config, zeta1, GT);
        try {
          const pretro::TruncatedSchedule ts = pretro::truncated_schedule(
              dir, zeta1, spec.zeta2, spec.gamma_ref, T, caps[slot - 1]);
          c.error = pretro::evaluate_protocol(spec, ts.filter,
                                              RateSchedule::constant(spec.gamma_ref, T),
                                              ts.schedule)
                        .err_var;
          c.alpha = ts.alpha;
        } catch (const pretro::ConvergenceError&) {
          // no exponent balances the transfer coefficients under this cap
        }
        return c;
      });

  std::vector<ErrorCurveRow> out(rows);
  for (std::size_t row = 0; row < rows; ++row) {
    ErrorCurveRow& r = out[row];
    r.zeta1 = z[row / g.size()];
    r.Gamma1_T = g[row % g.size()];
    r.error_ideal = cells[row * per_row].error;
    for (std::size_t k = 0; k < caps.size(); ++k) {
      r.error_truncated.push_back(cells[row * per_row + 1 + k].error);
      r.alpha.push_back(cells[row * per_row + 1 + k].alpha);
    }
  }
  return out;
}

int cmd_error_curve(const RunConfig& config, const CommandContext& ctx) {
  const std::vector<ErrorCurveRow> rows = error_curve_rows(config, ctx.threads);
  CsvWriter csv(open_output(ctx, "error_curve.csv"));
  std::vector<std::string> header = {"schema_version", "zeta1", "Gamma1_T", "error_ideal"};
  for (double r : config.engine.r_max) header.push_back("error_rmax" + label(r));
  for (double r : config.engine.r_max) header.push_back("alpha_rmax" + label(r));
  csv.row(header);
  const std::string v = std::to_string(kSchemaVersion);
  for (const ErrorCurveRow& r : rows) {
    std::vector<std::string> f = {v, csv_number(r.zeta1), csv_number(r.Gamma1_T),
                                  csv_number(r.error_ideal)};
    for (double e : r.error_truncated) f.push_back(csv_number(e));
    for (double a : r.alpha) f.push_back(csv_number(a));
    csv.row(f);
  }
  note(ctx, "error-curve: " + std::to_string(rows.size()) + " rows");
  return kExitOk;
}

// ------------------------------------------------------------ fidelity map

std::vector<FidelityMapRow> fidelity_map_rows(const RunConfig& config, int threads) {
  const std::vector<double>& z1 = config.sweep.zeta1;
  const std::vector<double>& z2 = config.sweep.zeta2.empty() ? z1 : config.sweep.zeta2;
  const pretro::Topology topology = config.protocol.topology;
  const double T = config.protocol.T, n_in = config.protocol.n_in;
  const double G2T = config.engine.gamma2_T;

  auto limit = [&](Direction d, double zeta1) {
    try {
      return pretro::fidelity_from_error(pretro::min_error_limit(d, topology, zeta1, n_in));
    } catch (const pretro::DomainError&) {
      return kNaN;
    }
  };
  auto uncond = [&](double zeta1, double zeta2, double GT) {
    try {
      return pretro::uncond_protocol(zeta1, zeta2, GT / T, T,
                                     pretro::UncondSchedule::unconditional, n_in)
          .F_uc;
    } catch (const pretro::DomainError&) {
      return kNaN;
    } catch (const pretro::UnsupportedParameter&) {
      return kNaN;
    }
  };

  return ordered_map<FidelityMapRow>(z1.size() * z2.size(), threads, [&](std::size_t i) {
    FidelityMapRow r;
    r.zeta1 = z1[i / z2.size()];
    r.zeta2 = z2[i % z2.size()];
    r.F_teleport = limit(Direction::teleport_2_to_1, r.zeta1);
    r.F_direct = limit(Direction::direct_1_to_2, r.zeta1);
    r.F_uc = uncond(r.zeta1, r.zeta2, G2T);
    r.F_uc_half = uncond(r.zeta1, r.zeta2, 0.5 * G2T);
    r.F_uc_richardson = 2.0 * r.F_uc - r.F_uc_half;
    r.richardson_delta = std::abs(r.F_uc_richardson - r.F_uc);
    return r;
  });
}

int cmd_fidelity_map(const RunConfig& config, const CommandContext& ctx) {
  const std::vector<FidelityMapRow> rows = fidelity_map_rows(config, ctx.threads);
  CsvWriter csv(open_output(ctx, "fidelity_map.csv"));
  csv.row({"schema_version", "zeta1", "zeta2", "F_teleport", "F_direct", "gamma2_T", "F_uc",
           "F_uc_half", "F_uc_richardson", "richardson_delta"});
  const std::string v = std::to_string(kSchemaVersion);
  const std::string g = csv_number(config.engine.gamma2_T);
  for (const FidelityMapRow& r : rows)
    csv.row({v, csv_number(r.zeta1), csv_number(r.zeta2), csv_number(r.F_teleport),
             csv_number(r.F_direct), g, csv_number(r.F_uc), csv_number(r.F_uc_half),
             csv_number(r.F_uc_richardson), csv_number(r.richardson_delta)});
  note(ctx, "fidelity-map: " + std::to_string(rows.size()) + " rows");
  return kExitOk;
}

// ------------------------------------------------------------------ verify

int cmd_verify(const RunConfig& config, const CommandContext& ctx) {
  pretro::VerifyOptions o;
  o.bins = config.engine.bins;
  o.trials = config.engine.trials;
  o.batches = config.engine.batches;
  o.seed = config.engine.seed;
  o.threads = ctx.threads;
  o.record_imbalance = ctx.corrupt_record;
  const std::vector<pretro::CheckResult> checks = pretro::run_verification(o);

  bool passed = true;
  int warnings = 0;
  json list = json::array();
  for (const pretro::CheckResult& c : checks) {
    passed = passed && c.passed;
    warnings += c.warning;
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"warning", c.warning},
                    {"value", c.value},
                    {"tolerance", c.tolerance},
                    {"detail", c.detail}});
    if (ctx.log) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%-30s %-4s%s value=%-10.3g tol=%-8.3g ", c.name.c_str(),
                    c.passed ? "PASS" : "FAIL", c.warning ? "*" : " ", c.value, c.tolerance);
      *ctx.log << buf << c.detail << '\n';
    }
  }
  json report = {{"schema_version", kSchemaVersion},
                 {"config", config.to_json()},
                 {"corrupt_record", ctx.corrupt_record},
                 {"passed", passed},
                 {"warnings", warnings},
                 {"checks", list}};
  write_json(ctx, "verify.json", report);
  note(ctx, std::string("verify: ") + (passed ? "all checks passed" : "FAILED") +
                (warnings ? " (" + std::to_string(warnings) + " warnings)" : ""));
  return passed ? kExitOk : kExitVerification;
}

// ------------------------------------------------------------ trajectories

int cmd_trajectories(const RunConfig& config, const CommandContext& ctx) {
  if (config.protocol.schedule != "optimal")
    throw pretro::UnsupportedParameter("trajectories run the optimal schedule");
  pretro::TrajectoryConfig tc = pretro::optimal_trajectory_config(config.protocol.spec());
  tc.source = config.inputs.source;
  tc.target = config.inputs.target;
  tc.trials = config.engine.trials;
  tc.seed = config.engine.seed;
  tc.batches = config.engine.batches;
  tc.bins.bins = config.engine.bins;
  const pretro::FidelityEstimate e = pretro::estimate_fidelity(tc, ctx.threads);
  const pretro::BinSimReport b =
      pretro::simulate_protocol(tc.spec, tc.filter, tc.s1, tc.s2, tc.aux, tc.bins);
  const pretro::InteractionSpec& s = tc.spec;
  const double closed_form =
      pretro::min_error(s.direction, s.topology, s.zeta1, s.gamma_ref * s.T, s.n_in);

  CsvWriter csv(open_output(ctx, "trajectories.csv"));
  csv.row({"schema_version", "trial", "M_re", "M_im", "target_x", "target_p", "aligned_x",
           "aligned_p", "var_x", "var_p", "excess"});
  const std::string v = std::to_string(kSchemaVersion);
  const std::string vx = csv_number(e.target_covariance(0, 0)),
                    vp = csv_number(e.target_covariance(1, 1));
  for (const pretro::TrialResult& t : e.trials)
    csv.row({v, std::to_string(t.index), csv_number(t.M.real()), csv_number(t.M.imag()),
             csv_number(t.target_mean[0]), csv_number(t.target_mean[1]),
             csv_number(t.aligned_mean[0]), csv_number(t.aligned_mean[1]), vx, vp,
             csv_number(t.excess)});

  json summary = {
      {"schema_version", kSchemaVersion},
      {"config", config.to_json()},
      {"effective_zeta2", s.zeta2},
      {"trials", int(e.trials.size())},
      {"bins", e.bins},
      {"F", e.F},
      {"F_stderr", e.F_stderr},
      {"excess", e.excess},
      {"excess_stderr", e.excess_stderr},
      {"F_binsim", pretro::fidelity_from_error(b.err_var)},
      {"F_closed_form", pretro::fidelity_from_error(closed_form)},
      {"aligned_mean", {e.aligned_mean[0], e.aligned_mean[1]}},
      {"aligned_mean_stderr", {e.aligned_mean_stderr[0], e.aligned_mean_stderr[1]}},
      {"expected_mean", {e.expected_mean[0], e.expected_mean[1]}},
      {"var_M", e.var_M},
      {"var_M_stderr", e.var_M_stderr},
      {"var_M_binsim", b.var_M},
      {"target_covariance",
       {{e.target_covariance(0, 0), e.target_covariance(0, 1)},
        {e.target_covariance(1, 0), e.target_covariance(1, 1)}}},
      {"min_uncertainty_margin", e.min_uncertainty_margin},
  };
  write_json(ctx, "trajectories_summary.json", summary);
  char buf[160];
  std::snprintf(buf, sizeof buf, "trajectories: F = %.5f +- %.5f (binsim %.5f, closed form %.5f)",
                e.F, e.F_stderr, pretro::fidelity_from_error(b.err_var),
                pretro::fidelity_from_error(closed_form));
  note(ctx, buf);
  return kExitOk;
}

}  // namespace pretrodict
