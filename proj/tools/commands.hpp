#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace pretrodict {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitVerification = 3;
inline constexpr int kExitNumerical = 4;

struct CommandContext {
  std::filesystem::path out_dir = "out";
  int threads = 1;
  // verify only: weight of the c^dag record sideband minus one.
  double corrupt_record = 0.0;
  std::ostream* log = nullptr;  // progress and summaries; null silences
};

// One table row per sample of the configured schedule.
struct ScheduleRow {
  std::string kind;
  double t_over_T = 0.0;
  double gamma_over_ref = 0.0;
  double filter_times_sqrtT = 0.0;  // NaN when the schedule has no filter
  bool saturated = false;           // clipped at r_max * gamma_ref
  double tail_ratio = 0.0;          // jahne / unconditional(zeta = 1); NaN elsewhere
};
std::vector<ScheduleRow> schedule_rows(const RunConfig& config);

struct ErrorCurveRow {
  double zeta1 = 0.0;
  double Gamma1_T = 0.0;
  double error_ideal = 0.0;
  // Per engine.r_max entry; NaN where no retuned exponent exists.
  std::vector<double> error_truncated;
  std::vector<double> alpha;
};
std::vector<ErrorCurveRow> error_curve_rows(const RunConfig& config, int threads);

struct FidelityMapRow {
  double zeta1 = 0.0, zeta2 = 0.0;
  double F_teleport = 0.0, F_direct = 0.0;  // conditional, infinite strength
  double F_uc = 0.0;                        // unconditional at engine.gamma2_T
  double F_uc_half = 0.0;                   // at engine.gamma2_T / 2
  double F_uc_richardson = 0.0;             // 2 F_uc - F_uc_half
  double richardson_delta = 0.0;            // |F_uc_richardson - F_uc|
};
std::vector<FidelityMapRow> fidelity_map_rows(const RunConfig& config, int threads);

// Each writes its files into ctx.out_dir and returns a process exit code.
int cmd_schedule(const RunConfig& config, const CommandContext& ctx);
int cmd_error_curve(const RunConfig& config, const CommandContext& ctx);
int cmd_fidelity_map(const RunConfig& config, const CommandContext& ctx);
int cmd_verify(const RunConfig& config, const CommandContext& ctx);
int cmd_trajectories(const RunConfig& config, const CommandContext& ctx);

// Shortest round-trip decimal form; empty for NaN.
std::string csv_number(double x);

}  // namespace pretrodict
