// Experiment dispatch and result emission.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "forksim/config.hpp"

namespace forksim {

struct ResultRow {
  std::string config_hash;
  std::string param_point;
  std::string metric;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

enum class ResultFormat { Csv, Json };

// Runs the configured experiment and returns one row per reported metric,
// in a fixed order.  Output is a pure function of (config, threads is
// irrelevant to the values).  Progress notes go to `diagnostics`.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int threads,
                                      std::ostream& diagnostics);

// CSV: the fixed header param_point,metric,estimate,ci_low,ci_high,n,seed
// followed by one line per row.  JSON: an array of objects carrying every
// ResultRow field.  Numbers use %.9g.  Empty input throws InsufficientData.
void emit_results(const std::vector<ResultRow>& rows, ResultFormat format, std::ostream& out);

// Parses emit_results JSON output back into rows.
std::vector<ResultRow> parse_results_json(const std::string& text);

// What `run` writes to disk: for CSV a leading "# config_hash=..." comment
// line then emit_results; for JSON emit_results as is (rows carry the hash).
std::string render_result_file(const std::vector<ResultRow>& rows, ResultFormat format);

}  // namespace forksim
