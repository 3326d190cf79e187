// Command-line front end: pretrodict <subcommand> [--config PATH] [--out DIR]
// [--seed U64] [--threads N].

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pretro/errors.hpp"

namespace {

using namespace pretrodict;

int run(const std::string& name, const std::optional<std::string>& config_path,
        const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed,
        int threads, double corrupt_record) {
  RunConfig config = config_path ? load_config(*config_path) : parse_config(nlohmann::json::object());
  if (out) config.out_dir = *out;
  if (seed) config.engine.seed = *seed;
  if (threads > 0) config.engine.threads = threads;

  CommandContext ctx;
  ctx.out_dir = config.out_dir;
  ctx.threads = resolve_threads(config.engine.threads);
  ctx.corrupt_record = corrupt_record;
  ctx.log = &std::cout;

  if (name == "schedule") return cmd_schedule(config, ctx);
  if (name == "error-curve") return cmd_error_curve(config, ctx);
  if (name == "fidelity-map") return cmd_fidelity_map(config, ctx);
  if (name == "verify") return cmd_verify(config, ctx);
  return cmd_trajectories(config, ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous pretrodiction protocols: schedules, error curves, fidelity maps, "
               "verification and trajectories"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  double corrupt_record = 0.0;
  app.add_option("--config", config_path, "JSON configuration document")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "base seed (overrides engine.seed)");
  app.add_option("--threads", threads, "worker threads; else PRETRODICT_THREADS, else all cores")
      ->check(CLI::NonNegativeNumber);

  for (const char* name : {"schedule", "error-curve", "fidelity-map", "verify", "trajectories"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();
    if (std::string(name) == "verify")
      sub->add_option("--corrupt-record", corrupt_record,
                      "negative control: unbalance the record sidebands by this fraction");
  }
  app.get_subcommand("schedule")->description("rate schedule and filter table");
  app.get_subcommand("error-curve")->description("minimum error against measurement strength");
  app.get_subcommand("fidelity-map")->description("infinite-strength fidelities over (zeta1, zeta2)");
  app.get_subcommand("verify")->description("identity, oracle and Monte-Carlo checks");
  app.get_subcommand("trajectories")->description("conditional Monte-Carlo teleportation run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), config_path, out, seed, threads,
               corrupt_record);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {  // DomainError, UnsupportedParameter
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pretro::SingularityError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pretro::ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNumerical;
  } catch (const pretro::StabilityError& e) {
    std::cerr << "numerical instability: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
