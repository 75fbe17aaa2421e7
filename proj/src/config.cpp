#include "forksim/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "forksim/adversary.hpp"
#include "forksim/errors.hpp"

namespace forksim {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail_line(std::size_t lineno, const std::string& what) {
  throw ConfigError("line " + std::to_string(lineno) + ": " + what);
}

double parse_double(const std::string& value, const std::string& key, std::size_t lineno) {
  char* end = nullptr;
  const double x = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    fail_line(lineno, key + ": expected a number, got '" + value + "'");
  return x;
}

std::int64_t parse_int(const std::string& value, const std::string& key, std::size_t lineno) {
  char* end = nullptr;
  const long long x = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    fail_line(lineno, key + ": expected an integer, got '" + value + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& value, const std::string& key, std::size_t lineno) {
  if (!value.empty() && value[0] == '-')
    fail_line(lineno, key + ": expected a nonnegative integer, got '" + value + "'");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    fail_line(lineno, key + ": expected an integer, got '" + value + "'");
  return x;
}

bool parse_bool(const std::string& value, const std::string& key, std::size_t lineno) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail_line(lineno, key + ": expected true or false, got '" + value + "'");
}

std::vector<double> parse_list(const std::string& value, const std::string& key,
                               std::size_t lineno) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail_line(lineno, key + ": empty list element");
    out.push_back(parse_double(item, key, lineno));
  }
  if (out.empty()) fail_line(lineno, key + ": expected a comma-separated list");
  return out;
}

ExperimentKind parse_experiment(const std::string& value, std::size_t lineno) {
  if (value == "lambda-h") return ExperimentKind::LambdaH;
  if (value == "nakamoto-prob") return ExperimentKind::NakamotoProb;
  if (value == "persistence") return ExperimentKind::Persistence;
  if (value == "private-attack") return ExperimentKind::PrivateAttack;
  if (value == "counterexample") return ExperimentKind::Counterexample;
  if (value == "decay-no-nakamoto") return ExperimentKind::DecayNoNakamoto;
  if (value == "decay-overtake") return ExperimentKind::DecayOvertake;
  if (value == "phase-diagram") return ExperimentKind::PhaseDiagram;
  fail_line(lineno, "experiment: unknown value '" + value + "'");
}

[[noreturn]] void fail_field(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

}  // namespace

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::LambdaH: return "lambda-h";
    case ExperimentKind::NakamotoProb: return "nakamoto-prob";
    case ExperimentKind::Persistence: return "persistence";
    case ExperimentKind::PrivateAttack: return "private-attack";
    case ExperimentKind::Counterexample: return "counterexample";
    case ExperimentKind::DecayNoNakamoto: return "decay-no-nakamoto";
    case ExperimentKind::DecayOvertake: return "decay-overtake";
    case ExperimentKind::PhaseDiagram: return "phase-diagram";
  }
  throw InvalidParameter("unknown experiment kind");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.source_text = text;

  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  bool in_type = false;
  bool has_experiment = false;
  BlockTypeSpec current;
  auto flush_type = [&] {
    if (in_type) cfg.types.push_back(current);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line == "[type]") {
      flush_type();
      in_type = true;
      current = BlockTypeSpec{};
      continue;
    }
    if (line.front() == '[') fail_line(lineno, "unknown section '" + line + "'");
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail_line(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_line(lineno, "expected key = value");
    if (value.empty()) fail_line(lineno, key + ": empty value");

    if (in_type) {
      if (key == "id") {
        current.type_id = static_cast<int>(parse_int(value, key, lineno));
      } else if (key == "score") {
        current.score = parse_double(value, key, lineno);
      } else if (key == "honest_rate") {
        current.honest_rate = parse_double(value, key, lineno);
      } else if (key == "adversary_rate") {
        current.adversary_rate = parse_double(value, key, lineno);
      } else {
        fail_line(lineno, "unknown key '" + key + "' in [type]");
      }
      continue;
    }

    if (key == "experiment") {
      cfg.experiment = parse_experiment(value, lineno);
      has_experiment = true;
    } else if (key == "delta") {
      cfg.delta = parse_double(value, key, lineno);
    } else if (key == "horizon") {
      cfg.horizon = parse_double(value, key, lineno);
    } else if (key == "n_trials") {
      cfg.n_trials = parse_int(value, key, lineno);
    } else if (key == "seed") {
      cfg.root_seed = parse_uint(value, key, lineno);
    } else if (key == "n_miners") {
      cfg.n_miners = static_cast<int>(parse_int(value, key, lineno));
    } else if (key == "q") {
      cfg.q = parse_double(value, key, lineno);
    } else if (key == "ci_level") {
      cfg.ci_level = parse_double(value, key, lineno);
    } else if (key == "strategy") {
      cfg.strategy = value;
    } else if (key == "restart_at_reveal") {
      cfg.private_restart_at_reveal = parse_bool(value, key, lineno);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(value, key, lineno);
    } else if (key == "segment_len") {
      cfg.segment_len = parse_double(value, key, lineno);
    } else if (key == "n_steps") {
      cfg.n_steps = parse_int(value, key, lineno);
    } else if (key == "counter_h") {
      cfg.counter_h = parse_double(value, key, lineno);
    } else if (key == "counter_b") {
      cfg.counter_b = parse_double(value, key, lineno);
    } else if (key == "tau_q") {
      cfg.tau_q = parse_double(value, key, lineno);
    } else if (key == "window") {
      cfg.window = parse_double(value, key, lineno);
    } else if (key == "tprimes") {
      cfg.tprimes = parse_list(value, key, lineno);
    } else if (key == "lengths") {
      cfg.lengths = parse_list(value, key, lineno);
    } else if (key == "ratios") {
      cfg.ratios = parse_list(value, key, lineno);
    } else {
      fail_line(lineno, "unknown key '" + key + "'");
    }
  }
  flush_type();

  if (!has_experiment) fail_field("experiment", "required");
  const ExperimentKind kind = cfg.experiment;

  if (kind != ExperimentKind::Counterexample) {
    if (cfg.types.empty()) fail_field("types", "at least one [type] section is required");
    try {
      validate_specs(cfg.types);
    } catch (const InvalidParameter& e) {
      fail_field("types", e.what());
    }
  }
  if (!(std::isfinite(cfg.delta) && cfg.delta >= 0.0))
    fail_field("delta", "must be nonnegative and finite");

  const bool needs_horizon =
      kind == ExperimentKind::LambdaH || kind == ExperimentKind::NakamotoProb ||
      kind == ExperimentKind::Persistence || kind == ExperimentKind::PrivateAttack ||
      kind == ExperimentKind::PhaseDiagram;
  if (needs_horizon && !(std::isfinite(cfg.horizon) && cfg.horizon > 0.0))
    fail_field("horizon", "must be positive and finite");

  if (cfg.n_trials < 1) fail_field("n_trials", "must be at least 1");
  if (cfg.n_miners < 1) fail_field("n_miners", "must be at least 1");
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) fail_field("ci_level", "must lie in (0, 1)");
  if (!(std::isfinite(cfg.q) && cfg.q >= 0.0)) fail_field("q", "must be nonnegative and finite");
  const bool needs_q = kind == ExperimentKind::NakamotoProb ||
                       kind == ExperimentKind::Persistence ||
                       kind == ExperimentKind::DecayNoNakamoto;
  if (needs_q && cfg.q == 0.0 && cfg.delta == 0.0)
    fail_field("q", "must be positive when delta is zero");
  try {
    make_strategy(cfg.strategy);
  } catch (const InvalidParameter&) {
    fail_field("strategy", "unknown strategy '" + cfg.strategy + "'");
  }

  if (kind == ExperimentKind::Counterexample) {
    if (!(std::isfinite(cfg.counter_h) && cfg.counter_h > 0.0))
      fail_field("counter_h", "must be positive and finite");
    if (!(std::isfinite(cfg.counter_b) && cfg.counter_b > 0.0))
      fail_field("counter_b", "must be positive and finite");
    if (cfg.n_steps < 2) fail_field("n_steps", "must be at least 2");
  }
  if (kind == ExperimentKind::DecayNoNakamoto && cfg.lengths.size() < 3)
    fail_field("lengths", "need at least three lengths");
  if (kind == ExperimentKind::DecayOvertake) {
    if (cfg.tprimes.size() < 3) fail_field("tprimes", "need at least three lengths");
    if (!(std::isfinite(cfg.window) && cfg.window > 0.0))
      fail_field("window", "must be positive and finite");
  }
  if (kind == ExperimentKind::PhaseDiagram) {
    if (cfg.ratios.empty()) fail_field("ratios", "need at least one ratio");
    if (cfg.types.size() != 1) fail_field("types", "phase diagram needs exactly one block type");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace forksim
