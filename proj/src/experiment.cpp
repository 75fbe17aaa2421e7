#include "forksim/experiment.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "forksim/adversary.hpp"
#include "forksim/analysis.hpp"
#include "forksim/arrivals.hpp"
#include "forksim/errors.hpp"
#include "forksim/parallel.hpp"
#include "forksim/rng.hpp"

namespace forksim {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

struct RowBuilder {
  std::string hash;
  std::uint64_t seed = 0;
  std::vector<ResultRow> rows;

  void add(std::string param, std::string metric, double estimate, double ci_low,
           double ci_high, std::int64_t n) {
    rows.push_back(
        {hash, std::move(param), std::move(metric), estimate, ci_low, ci_high, n, seed});
  }
  void add_count(std::string param, std::string metric, std::int64_t count, std::int64_t n) {
    const double c = static_cast<double>(count);
    add(std::move(param), std::move(metric), c, c, c, n);
  }
  void add_proportion(std::string param, std::string metric, const ProportionEstimate& p,
                      double level) {
    const ProportionEstimate r = proportion(p.successes, p.n, level);
    add(std::move(param), std::move(metric), r.estimate, r.ci_low, r.ci_high, r.n);
  }
};

std::string effective_strategy(const ExperimentConfig& cfg) {
  if (cfg.strategy == "private-mining" && cfg.private_restart_at_reveal)
    return "private-mining-restart";
  return cfg.strategy;
}

double effective_q(const ExperimentConfig& cfg) { return cfg.q > 0.0 ? cfg.q : cfg.delta; }

void run_lambda_h(const ExperimentConfig& cfg, RowBuilder& b, std::ostream& diag) {
  const double h = total_honest_rate(cfg.types);
  const std::string param = "h=" + num(h) + ";delta=" + num(cfg.delta);
  const RateSummary r =
      estimate_lambda_h(cfg.types, cfg.delta, cfg.horizon, cfg.root_seed, cfg.n_miners);
  const double z = normal_quantile_two_sided(cfg.ci_level);
  b.add(param, "lambda_h", r.lambda_h, r.lambda_h - z * r.stderr_, r.lambda_h + z * r.stderr_,
        r.n_renewals);
  if (cfg.types.size() == 1) {
    const double closed = cfg.types[0].score * lambda_h_closed_form(h, cfg.delta);
    b.add(param, "lambda_h_closed_form", closed, closed, closed, 0);
  }
  diag << "lambda-h: " << num(r.lambda_h) << " from " << r.n_renewals << " renewals\n";
}

void run_nakamoto_prob(const ExperimentConfig& cfg, int threads, RowBuilder& b,
                       std::ostream& diag) {
  const double q = effective_q(cfg);
  const NakamotoProbability r = estimate_nakamoto_probability(
      cfg.types, cfg.delta, q, cfg.n_trials, cfg.horizon, cfg.root_seed, threads, cfg.tau_q);
  const std::string param = "tau_q=" + num(r.tau_q) + ";q=" + num(q);
  b.add_proportion(param, "p_joint", r.p_joint, cfg.ci_level);
  b.add_proportion(param, "p_l", r.p_l, cfg.ci_level);
  b.add_proportion(param, "p_e1", r.p_e1, cfg.ci_level);
  b.add_proportion(param, "p_e2", r.p_e2, cfg.ci_level);
  b.add(param, "independence_gap", r.independence_gap, 0.0, r.independence_band, cfg.n_trials);
  diag << "nakamoto-prob: p_joint=" << num(r.p_joint.estimate)
       << " gap=" << num(r.independence_gap) << " band=" << num(r.independence_band) << "\n";
}

void run_persistence(const ExperimentConfig& cfg, int threads, RowBuilder& b,
                     std::ostream& diag) {
  const std::string strat = effective_strategy(cfg);
  const PersistenceSummary r =
      run_persistence_trials(cfg.types, cfg.delta, effective_q(cfg), cfg.horizon, strat,
                             cfg.n_trials, cfg.root_seed, cfg.n_miners, threads);
  const std::string param = "strategy=" + strat;
  b.add_count(param, "windows_checked", r.windows_checked, r.n_trials);
  b.add_count(param, "flagged", r.flagged, r.windows_checked);
  b.add_count(param, "persistence_failures", r.failures, r.flagged);
  diag << "persistence: " << r.flagged << " flagged of " << r.windows_checked << " windows, "
       << r.failures << " failures\n";
}

void run_private_attack(const ExperimentConfig& cfg, int threads, RowBuilder& b,
                        std::ostream& diag) {
  const std::int64_t n = cfg.n_trials;
  std::vector<char> dominated(n), survivor(n), mismatch(n);
  parallel_for(n, threads, [&](std::int64_t i) {
    const ArrivalTrace honest = generate_typed_trace(
        cfg.types, Origin::Honest, cfg.n_miners, cfg.horizon, trial_seed(cfg.root_seed, 2 * i));
    const ArrivalTrace adv =
        generate_typed_trace(cfg.types, Origin::Adversary, cfg.n_miners, cfg.horizon,
                             trial_seed(cfg.root_seed, 2 * i + 1));
    auto strategy = make_private_mining_strategy(false);
    const AttackOutcome out =
        run_with_strategy(*strategy, honest, adv, cfg.types, cfg.delta, cfg.n_miners).second;
    const AttackOutcome ref = run_private_mining(honest, adv, cfg.types, cfg.delta, cfg.n_miners);
    dominated[i] = out.dominated_at.has_value();
    survivor[i] = out.first_half_survivor;
    mismatch[i] = !(out.dominated_at == ref.dominated_at && out.reveal_times == ref.reveal_times &&
                    out.final_honest_blocks_in_chain == ref.final_honest_blocks_in_chain &&
                    out.first_half_survivor == ref.first_half_survivor);
  });
  std::int64_t n_dom = 0, n_surv = 0, n_mis = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    n_dom += dominated[i];
    n_surv += survivor[i];
    n_mis += mismatch[i];
  }
  const std::string param = "b=" + num(total_adversary_rate(cfg.types));
  b.add_proportion(param, "p_dominated", proportion(n_dom, n), cfg.ci_level);
  b.add_proportion(param, "p_survivor_first_half", proportion(n_surv, n), cfg.ci_level);
  b.add_count(param, "route_mismatches", n_mis, n);
  diag << "private-attack: dominated " << n_dom << "/" << n << ", mismatches " << n_mis << "\n";
}

void run_counterexample_exp(const ExperimentConfig& cfg, RowBuilder& b, std::ostream& diag) {
  const CounterexampleStats r =
      run_counterexample(cfg.counter_h, cfg.counter_b, cfg.delta, cfg.n_steps, cfg.root_seed);
  const std::string param =
      "h=" + num(cfg.counter_h) + ";b=" + num(cfg.counter_b) + ";delta=" + num(cfg.delta);
  b.add_proportion(param, "p_minus_given_plus", r.p_cond, cfg.ci_level);
  b.add_proportion(param, "p_minus", r.p_marg, cfg.ci_level);
  b.add(param, "dependence_gap", r.dependence_gap, r.dependence_gap, r.dependence_gap,
        r.n_steps);
  diag << "counterexample: p_cond=" << num(r.p_cond.estimate)
       << " p_marg=" << num(r.p_marg.estimate) << "\n";
}

void add_decay_rows(const DecayFit& r, const char* axis, const char* metric, double level,
                    RowBuilder& b) {
  for (std::size_t i = 0; i < r.lengths.size(); ++i) {
    const std::string param = std::string(axis) + "=" + num(r.lengths[i]);
    b.add_proportion(param, metric, proportion(r.successes[i], r.n_trials), level);
  }
  const double z = normal_quantile_two_sided(level);
  const std::int64_t fitted =
      static_cast<std::int64_t>(r.lengths.size() - r.dropped_lengths.size());
  b.add("fit", "slope", r.fit.slope, r.fit.slope - z * r.fit.slope_stderr,
        r.fit.slope + z * r.fit.slope_stderr, fitted);
  b.add("fit", "intercept", r.fit.intercept, r.fit.intercept, r.fit.intercept, fitted);
  b.add("fit", "r_squared", r.fit.r_squared, r.fit.r_squared, r.fit.r_squared, fitted);
}

void run_decay_no_nakamoto(const ExperimentConfig& cfg, int threads, RowBuilder& b,
                           std::ostream& diag) {
  const DecayFit r = estimate_no_nakamoto_decay(cfg.types, cfg.delta, effective_q(cfg),
                                                cfg.lengths, cfg.n_trials, cfg.root_seed,
                                                threads);
  add_decay_rows(r, "length", "p_no_nakamoto", cfg.ci_level, b);
  diag << "decay-no-nakamoto: slope=" << num(r.fit.slope) << " r2=" << num(r.fit.r_squared)
       << "\n";
}

void run_decay_overtake(const ExperimentConfig& cfg, int threads, RowBuilder& b,
                        std::ostream& diag) {
  const DecayFit r = estimate_overtake_decay(cfg.types, cfg.delta, cfg.window, cfg.tprimes,
                                             cfg.n_trials, cfg.root_seed, threads);
  add_decay_rows(r, "tprime", "p_overtaken", cfg.ci_level, b);
  diag << "decay-overtake: slope=" << num(r.fit.slope) << " r2=" << num(r.fit.r_squared) << "\n";
}

void run_phase_diagram(const ExperimentConfig& cfg, int threads, RowBuilder& b,
                       std::ostream& diag) {
  const std::string strat = effective_strategy(cfg);
  const double h = cfg.types[0].honest_rate;
  for (std::size_t ri = 0; ri < cfg.ratios.size(); ++ri) {
    const double ratio = cfg.ratios[ri];
    if (!(ratio >= 0.0)) throw InvalidParameter("phase diagram ratio must be nonnegative");
    BlockTypeSpec spec = cfg.types[0];
    spec.adversary_rate = ratio * lambda_h_closed_form(h, cfg.delta);
    const std::vector<BlockTypeSpec> specs{spec};
    const std::uint64_t root = derive_seed(cfg.root_seed, ri);
    const std::int64_t n = cfg.n_trials;
    std::vector<char> wiped(n);
    parallel_for(n, threads, [&](std::int64_t i) {
      const ArrivalTrace honest = generate_typed_trace(specs, Origin::Honest, cfg.n_miners,
                                                       cfg.horizon, trial_seed(root, 2 * i));
      const ArrivalTrace adv = generate_typed_trace(specs, Origin::Adversary, cfg.n_miners,
                                                    cfg.horizon, trial_seed(root, 2 * i + 1));
      auto strategy = make_strategy(strat);
      // Attack success: no honest block mined in the first half of the run
      // is still on the canonical chain at the horizon.  Blocks mined just
      // before the horizon have had no time to be overtaken, so they carry
      // no signal either way.
      wiped[i] = !run_with_strategy(*strategy, honest, adv, specs, cfg.delta, cfg.n_miners)
                      .second.first_half_survivor;
    });
    std::int64_t n_wiped = 0;
    for (std::int64_t i = 0; i < n; ++i) n_wiped += wiped[i];
    b.add_proportion("ratio=" + num(ratio), "p_attack_success", proportion(n_wiped, n),
                     cfg.ci_level);
    diag << "phase-diagram: ratio " << num(ratio) << " success " << n_wiped << "/" << n << "\n";
  }
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int threads,
                                      std::ostream& diagnostics) {
  RowBuilder b;
  b.hash = config_hash(config.source_text);
  b.seed = config.root_seed;
  if (threads < 1) threads = 1;
  switch (config.experiment) {
    case ExperimentKind::LambdaH: run_lambda_h(config, b, diagnostics); break;
    case ExperimentKind::NakamotoProb: run_nakamoto_prob(config, threads, b, diagnostics); break;
    case ExperimentKind::Persistence: run_persistence(config, threads, b, diagnostics); break;
    case ExperimentKind::PrivateAttack:
      run_private_attack(config, threads, b, diagnostics);
      break;
    case ExperimentKind::Counterexample: run_counterexample_exp(config, b, diagnostics); break;
    case ExperimentKind::DecayNoNakamoto:
      run_decay_no_nakamoto(config, threads, b, diagnostics);
      break;
    case ExperimentKind::DecayOvertake:
      run_decay_overtake(config, threads, b, diagnostics);
      break;
    case ExperimentKind::PhaseDiagram: run_phase_diagram(config, threads, b, diagnostics); break;
  }
  return b.rows;
}

void emit_results(const std::vector<ResultRow>& rows, ResultFormat format, std::ostream& out) {
  if (rows.empty()) throw InsufficientData("no result rows to emit");
  char buf[512];
  if (format == ResultFormat::Csv) {
    out << "param_point,metric,estimate,ci_low,ci_high,n,seed\n";
    for (const ResultRow& r : rows) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.9g,%.9g,%.9g,%lld,%llu\n", r.param_point.c_str(),
                    r.metric.c_str(), r.estimate, r.ci_low, r.ci_high,
                    static_cast<long long>(r.n), static_cast<unsigned long long>(r.seed));
      out << buf;
    }
    return;
  }
  out << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ResultRow& r = rows[i];
    std::snprintf(buf, sizeof buf,
                  "  {\"config_hash\": \"%s\", \"param_point\": \"%s\", \"metric\": \"%s\", "
                  "\"estimate\": %.9g, \"ci_low\": %.9g, \"ci_high\": %.9g, \"n\": %lld, "
                  "\"seed\": \"%llu\"}%s\n",
                  r.config_hash.c_str(), r.param_point.c_str(), r.metric.c_str(), r.estimate,
                  r.ci_low, r.ci_high, static_cast<long long>(r.n),
                  static_cast<unsigned long long>(r.seed), i + 1 < rows.size() ? "," : "");
    out << buf;
  }
  out << "]\n";
}

std::vector<ResultRow> parse_results_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed result JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InvalidInput("result JSON must be an array of rows");
  std::vector<ResultRow> rows;
  rows.reserve(doc.size());
  try {
    for (const auto& o : doc) {
      ResultRow r;
      r.config_hash = o.at("config_hash").get<std::string>();
      r.param_point = o.at("param_point").get<std::string>();
      r.metric = o.at("metric").get<std::string>();
      r.estimate = o.at("estimate").get<double>();
      r.ci_low = o.at("ci_low").get<double>();
      r.ci_high = o.at("ci_high").get<double>();
      r.n = o.at("n").get<std::int64_t>();
      r.seed = std::stoull(o.at("seed").get<std::string>());
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed result row: ") + e.what());
  }
  return rows;
}

std::string render_result_file(const std::vector<ResultRow>& rows, ResultFormat format) {
  if (rows.empty()) throw InsufficientData("no result rows to emit");
  std::ostringstream out;
  if (format == ResultFormat::Csv) out << "# config_hash=" << rows.front().config_hash << "\n";
  emit_results(rows, format, out);
  return out.str();
}

}  // namespace forksim
