#include "config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "pretro/errors.hpp"

namespace pretrodict {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
  return x;
}

long long integer(const json& obj, const char* key, long long fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long long>();
}

std::string text(const json& obj, const char* key, const std::string& fallback,
                 const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& obj, const char* key, std::vector<double> fallback,
                            const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw ConfigError(where + "." + key + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

pretro::OscillatorInput parse_input(const json& obj, const std::string& where) {
  reject_unknown(obj, where, {"kind", "re", "im", "nbar"});
  const std::string kind = text(obj, "kind", "coherent", where);
  if (kind == "coherent") {
    require(!obj.contains("nbar"), where + ": nbar applies to thermal inputs only");
    return pretro::OscillatorInput::coherent(
        {number(obj, "re", 0.0, where), number(obj, "im", 0.0, where)});
  }
  if (kind == "thermal") {
    require(!obj.contains("re") && !obj.contains("im"),
            where + ": re/im apply to coherent inputs only");
    const double n = number(obj, "nbar", 0.0, where);
    require(n >= 0.0, where + ".nbar must be non-negative");
    return pretro::OscillatorInput::thermal(n);
  }
  throw ConfigError(where + ".kind must be 'coherent' or 'thermal'");
}

json input_json(const pretro::OscillatorInput& in) {
  if (in.kind == pretro::OscillatorInput::Kind::thermal)
    return {{"kind", "thermal"}, {"nbar", in.nbar}};
  return {{"kind", "coherent"}, {"re", in.alpha.real()}, {"im", in.alpha.imag()}};
}

}  // namespace

pretro::InteractionSpec ProtocolConfig::spec() const {
  pretro::InteractionSpec s;
  s.zeta1 = zeta1;
  s.zeta2 = zeta2;
  s.gamma_ref = gamma_ref;
  s.T = T;
  s.n_in = n_in;
  s.topology = topology;
  s.direction = direction;
  return s;
}

std::vector<double> SweepConfig::values() const {
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) {
    const double u = points == 1 ? 0.0 : double(i) / (points - 1);
    v[i] = log_spacing ? min * std::pow(max / min, u) : min + (max - min) * u;
  }
  return v;
}

RunConfig parse_config(const json& doc) {
  reject_unknown(doc, "config",
                 {"schema_version", "protocol", "sweep", "engine", "inputs", "output"});
  if (doc.contains("schema_version"))
    require(integer(doc, "schema_version", kSchemaVersion, "config") == kSchemaVersion,
            "unsupported schema_version");
  RunConfig c;
  const json empty = json::object();

  const json& p = doc.value("protocol", empty);
  const std::string wp = "protocol";
  reject_unknown(p, wp, {"zeta1", "zeta2", "gamma_ref", "T", "n_in", "topology", "direction",
                         "schedule", "r_max"});
  ProtocolConfig& pc = c.protocol;
  pc.zeta1 = number(p, "zeta1", pc.zeta1, wp);
  pc.zeta2 = number(p, "zeta2", pc.zeta2, wp);
  pc.gamma_ref = number(p, "gamma_ref", pc.gamma_ref, wp);
  pc.T = number(p, "T", pc.T, wp);
  pc.n_in = number(p, "n_in", pc.n_in, wp);
  pc.schedule = text(p, "schedule", pc.schedule, wp);
  pc.r_max = number(p, "r_max", pc.r_max, wp);
  try {
    pc.topology = pretro::topology_from_string(text(p, "topology", "sequential", wp));
    pc.direction = pretro::direction_from_string(text(p, "direction", "teleport", wp));
  } catch (const pretro::DomainError& e) {
    throw ConfigError(std::string("protocol: ") + e.what());
  }
  require(std::abs(pc.zeta1) <= 1.0 && std::abs(pc.zeta2) <= 1.0,
          "protocol: |zeta| must not exceed 1");
  require(pc.gamma_ref > 0.0, "protocol.gamma_ref must be positive");
  require(pc.T > 0.0, "protocol.T must be positive");
  require(pc.n_in >= 0.0, "protocol.n_in must be non-negative");
  require(pc.r_max > 0.0, "protocol.r_max must be positive");
  static const std::set<std::string> schedules = {"optimal", "constant", "unconditional",
                                                  "jahne", "truncated"};
  require(schedules.count(pc.schedule) > 0, "protocol.schedule is not a known schedule");

  const json& s = doc.value("sweep", empty);
  const std::string ws = "sweep";
  reject_unknown(s, ws, {"variable", "min", "max", "points", "spacing", "zeta1", "zeta2"});
  SweepConfig& sc = c.sweep;
  sc.variable = text(s, "variable", sc.variable, ws);
  require(sc.variable == "Gamma1_T" || sc.variable == "Gamma2_T",
          "sweep.variable must be 'Gamma1_T' or 'Gamma2_T'");
  sc.min = number(s, "min", sc.min, ws);
  sc.max = number(s, "max", sc.max, ws);
  sc.points = int(integer(s, "points", sc.points, ws));
  const std::string spacing = text(s, "spacing", "log", ws);
  require(spacing == "log" || spacing == "linear", "sweep.spacing must be 'log' or 'linear'");
  sc.log_spacing = spacing == "log";
  sc.zeta1 = numbers(s, "zeta1", sc.zeta1, ws);
  sc.zeta2 = numbers(s, "zeta2", sc.zeta2, ws);
  require(sc.points >= 1 && sc.points <= 100000, "sweep.points must lie in [1, 100000]");
  require(sc.min > 0.0 && sc.max >= sc.min, "sweep range must satisfy 0 < min <= max");
  for (double z : sc.zeta1) require(std::abs(z) <= 1.0, "sweep.zeta1 values must lie in [-1, 1]");
  for (double z : sc.zeta2) require(std::abs(z) <= 1.0, "sweep.zeta2 values must lie in [-1, 1]");
  require(!sc.zeta1.empty(), "sweep.zeta1 must not be empty");

  const json& e = doc.value("engine", empty);
  const std::string we = "engine";
  reject_unknown(e, we, {"bins", "r_max", "trials", "seed", "batches", "gamma2_T", "samples",
                         "threads"});
  EngineConfig& ec = c.engine;
  ec.bins = int(integer(e, "bins", ec.bins, we));
  ec.r_max = numbers(e, "r_max", ec.r_max, we);
  ec.trials = int(integer(e, "trials", ec.trials, we));
  const long long seed = integer(e, "seed", 0, we);
  require(seed >= 0, "engine.seed must be non-negative");
  ec.seed = std::uint64_t(seed);
  ec.batches = int(integer(e, "batches", ec.batches, we));
  ec.gamma2_T = number(e, "gamma2_T", ec.gamma2_T, we);
  ec.samples = int(integer(e, "samples", ec.samples, we));
  ec.threads = int(integer(e, "threads", ec.threads, we));
  require(ec.bins >= 1 && ec.bins <= 1000000, "engine.bins must lie in [1, 1e6]");
  for (double r : ec.r_max) require(r > 0.0, "engine.r_max values must be positive");
  require(ec.trials >= 1, "engine.trials must be at least 1");
  require(ec.batches >= 2 && ec.batches <= ec.trials, "engine.batches must lie in [2, trials]");
  require(ec.gamma2_T > 0.0, "engine.gamma2_T must be positive");
  require(ec.samples >= 2, "engine.samples must be at least 2");
  require(ec.threads >= 0, "engine.threads must be non-negative");

  const json& in = doc.value("inputs", empty);
  reject_unknown(in, "inputs", {"source", "target"});
  if (in.contains("source")) c.inputs.source = parse_input(in.at("source"), "inputs.source");
  if (in.contains("target")) c.inputs.target = parse_input(in.at("target"), "inputs.target");

  const json& o = doc.value("output", empty);
  reject_unknown(o, "output", {"dir"});
  c.out_dir = text(o, "dir", c.out_dir, "output");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json RunConfig::to_json() const {
  const ProtocolConfig& p = protocol;
  return {
      {"schema_version", kSchemaVersion},
      {"protocol",
       {{"zeta1", p.zeta1},
        {"zeta2", p.zeta2},
        {"gamma_ref", p.gamma_ref},
        {"T", p.T},
        {"n_in", p.n_in},
        {"topology", std::string(pretro::to_string(p.topology))},
        {"direction", std::string(pretro::to_string(p.direction))},
        {"schedule", p.schedule},
        {"r_max", p.r_max}}},
      {"sweep",
       {{"variable", sweep.variable},
        {"min", sweep.min},
        {"max", sweep.max},
        {"points", sweep.points},
        {"spacing", sweep.log_spacing ? "log" : "linear"},
        {"zeta1", sweep.zeta1},
        {"zeta2", sweep.zeta2}}},
      {"engine",
       {{"bins", engine.bins},
        {"r_max", engine.r_max},
        {"trials", engine.trials},
        {"seed", engine.seed},
        {"batches", engine.batches},
        {"gamma2_T", engine.gamma2_T},
        {"samples", engine.samples},
        {"threads", engine.threads}}},
      {"inputs", {{"source", input_json(inputs.source)}, {"target", input_json(inputs.target)}}},
      {"output", {{"dir", out_dir}}},
  };
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PRETRODICT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return int(n);
    throw ConfigError("PRETRODICT_THREADS must be a positive integer");
  }
  return int(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace pretrodict
