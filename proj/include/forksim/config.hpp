// Experiment configuration: a flat key = value file with repeatable [type]
// sections declaring block types.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "forksim/types.hpp"

namespace forksim {

enum class ExperimentKind {
  LambdaH,
  NakamotoProb,
  Persistence,
  PrivateAttack,
  Counterexample,
  DecayNoNakamoto,
  DecayOvertake,
  PhaseDiagram,
};

const char* experiment_name(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::LambdaH;
  std::vector<BlockTypeSpec> types;

  double delta = 0.0;
  double horizon = 0.0;
  std::int64_t n_trials = 1000;
  std::uint64_t root_seed = 1;
  int n_miners = 10;
  double q = 0.0;  // 0 = default to delta
  double ci_level = 0.95;
  std::string strategy = "private-mining";
  bool private_restart_at_reveal = false;

  // Experiment-specific knobs; unused ones stay at their defaults.
  double epsilon = 0.0;
  double segment_len = 0.0;  // 0 = default 20 / lambda_h
  std::int64_t n_steps = 100000;
  double counter_h = 0.0;
  double counter_b = 0.0;
  std::optional<double> tau_q;
  double window = 100.0;
  std::vector<double> tprimes;
  std::vector<double> lengths;
  std::vector<double> ratios;

  // Raw file bytes, hashed into result files.
  std::string source_text;
};

// Parses and validates a configuration.  Unknown keys, malformed lines
// (reported with their line number), and out-of-domain values (reported with
// their field name) all throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// FNV-1a 64 over the raw config bytes, as a 16-digit hex string.
std::string config_hash(const std::string& text);

}  // namespace forksim
