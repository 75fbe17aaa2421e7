// Command line front end: run experiments from config files, validate
// configs, and replay recorded traces through the fully-delayed chain.
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "forksim/analysis.hpp"
#include "forksim/arrivals.hpp"
#include "forksim/config.hpp"
#include "forksim/errors.hpp"
#include "forksim/experiment.hpp"
#include "forksim/fully_delayed.hpp"

namespace {

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

forksim::ResultFormat parse_format(const std::string& name) {
  if (name == "csv") return forksim::ResultFormat::Csv;
  if (name == "json") return forksim::ResultFormat::Json;
  throw forksim::InvalidParameter("unknown format '" + name + "' (use csv or json)");
}

int cmd_run(const std::string& config_path, const std::string& format_name,
            const std::string& out_path, int threads) {
  const forksim::ExperimentConfig cfg = forksim::load_config(config_path);
  std::cerr << "running " << forksim::experiment_name(cfg.experiment) << " (config hash "
            << forksim::config_hash(cfg.source_text) << ", " << threads << " threads)\n";
  const auto rows = forksim::run_experiment(cfg, threads, std::cerr);
  const std::string text = forksim::render_result_file(rows, parse_format(format_name));
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw forksim::InvalidInput("cannot open output file '" + out_path + "'");
  out << text;
  std::cerr << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const forksim::ExperimentConfig cfg = forksim::load_config(config_path);
  std::cout << "ok: " << forksim::experiment_name(cfg.experiment) << " with "
            << cfg.types.size() << " block type(s), config hash "
            << forksim::config_hash(cfg.source_text) << "\n";
  return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& config_path, double delta) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw forksim::InvalidInput("cannot open trace file '" + trace_path + "'");
  const forksim::ArrivalTrace trace = forksim::read_trace(in);

  std::vector<forksim::BlockTypeSpec> specs;
  if (!config_path.empty()) {
    const forksim::ExperimentConfig cfg = forksim::load_config(config_path);
    specs = cfg.types;
    delta = cfg.delta;
  } else {
    // A single unit-score type covering every type id seen in the trace.
    int max_type = 0;
    for (const auto& a : trace.arrivals) max_type = std::max(max_type, a.type_id);
    for (int t = 0; t <= max_type; ++t) specs.push_back({t, 1.0, 1.0, 0.0});
  }

  const forksim::FullyDelayedChain chain =
      forksim::build_fully_delayed_chain(trace, delta, specs);
  std::cout << "arrivals = " << trace.arrivals.size() << "\n";
  std::cout << "horizon = " << trace.horizon << "\n";
  std::cout << "delta = " << delta << "\n";
  std::cout << "final_score = " << chain.final_score() << "\n";
  std::cout << "jumps = " << chain.jumps.size() << "\n";
  std::cout << "gap_renewals = " << chain.renewal_times.size() << "\n";
  try {
    const forksim::RateSummary r = forksim::estimate_lambda_h(chain);
    std::cout << "lambda_h = " << r.lambda_h << "\n";
    std::cout << "lambda_h_stderr = " << r.stderr_ << "\n";
  } catch (const forksim::InsufficientData&) {
    std::cout << "lambda_h = n/a (too few renewals)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fork-choice simulator for multi-score Nakamoto consensus"};
  app.require_subcommand(1);

  std::string config_path;
  std::string format_name = "csv";
  std::string out_path;
  int threads = default_threads();
  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config_path, "config file path")->required();
  run->add_option("--format", format_name, "output format: csv or json (default csv)");
  run->add_option("--out", out_path, "output file (default stdout)");
  run->add_option("--threads", threads, "worker threads (default: hardware concurrency)");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
  validate->add_option("--config", validate_path, "config file path")->required();

  std::string trace_path;
  std::string replay_config;
  double replay_delta = 0.0;
  CLI::App* replay =
      app.add_subcommand("replay", "summarize a trace file through the fully-delayed chain");
  replay->add_option("--trace", trace_path, "trace file path")->required();
  replay->add_option("--config", replay_config,
                     "config file supplying block types and delta");
  replay->add_option("--delta", replay_delta, "delivery delay bound when no config is given");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, format_name, out_path, threads);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (replay->parsed()) return cmd_replay(trace_path, replay_config, replay_delta);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
