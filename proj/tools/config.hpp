#pragma once

#include <cstdint>
#include "json.hpp"
#include <optional>
#include <string>
#include <vector>

#include "pretro/model.hpp"
#include "pretro/trajectories.hpp"

namespace pretrodict {

inline constexpr int kSchemaVersion = 1;

// Invalid configuration document; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProtocolConfig {
  double zeta1 = -1.0;
  double zeta2 = 0.5;
  double gamma_ref = 1.0;
  double T = 1.0;
  double n_in = 0.0;
  pretro::Topology topology = pretro::Topology::sequential;
  pretro::Direction direction = pretro::Direction::teleport_2_to_1;
  // optimal | constant | unconditional | jahne | truncated
  std::string schedule = "optimal";
  double r_max = 100.0;  // truncated schedule only

  pretro::InteractionSpec spec() const;
};

struct SweepConfig {
  std::string variable = "Gamma1_T";
  double min = 0.1;
  double max = 10.0;
  int points = 40;
  bool log_spacing = true;
  std::vector<double> zeta1 = {-1.0, -0.5, 0.0};
  std::vector<double> zeta2;  // fidelity-map axis; defaults to the zeta1 grid

  std::vector<double> values() const;
};

struct EngineConfig {
  int bins = 4000;
  std::vector<double> r_max = {10.0, 100.0};
  int trials = 2000;
  std::uint64_t seed = 0;
  int batches = 20;
  double gamma2_T = 20.0;  // unconditional "infinite strength" proxy
  int samples = 201;       // rows of the schedule table
  int threads = 0;         // 0: from the environment or hardware
};

struct InputsConfig {
  pretro::OscillatorInput source = pretro::OscillatorInput::coherent({1.0, 0.5});
  pretro::OscillatorInput target = pretro::OscillatorInput::coherent(0.0);
};

struct RunConfig {
  ProtocolConfig protocol;
  SweepConfig sweep;
  EngineConfig engine;
  InputsConfig inputs;
  std::string out_dir = "out";

  // Round trip of the effective configuration, for output provenance.
  nlohmann::json to_json() const;
};

// Parses and validates a configuration document. Unknown keys, wrong types
// and out-of-range values raise ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

// Thread count: explicit value if positive, else PRETRODICT_THREADS, else the
// hardware concurrency.
int resolve_threads(int requested);

}  // namespace pretrodict
