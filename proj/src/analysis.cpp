#include "forksim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forksim/arrivals.hpp"
#include "forksim/parallel.hpp"
#include "forksim/rng.hpp"

namespace forksim {

namespace {

// Cumulative adversary score at or before t.
double adversary_cumulative(const std::vector<double>& times, const std::vector<double>& prefix,
                            double t) {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return it == times.begin() ? 0.0 : prefix[static_cast<std::size_t>(it - times.begin()) - 1];
}

struct AdversaryIndex {
  std::vector<double> times;
  std::vector<double> prefix;  // cumulative score including the arrival
};

AdversaryIndex index_adversary(const ArrivalTrace& adversary,
                               const std::vector<BlockTypeSpec>& specs) {
  AdversaryIndex ix;
  ix.times.reserve(adversary.arrivals.size());
  ix.prefix.reserve(adversary.arrivals.size());
  double run = 0.0;
  for (const Arrival& a : adversary.arrivals) {
    if (a.origin != Origin::Adversary)
      throw InvalidInput("adversary trace has an honest arrival");
    run += score_of(specs, a.type_id);
    ix.times.push_back(a.time);
    ix.prefix.push_back(run);
  }
  return ix;
}

std::size_t count_in_closed(const std::vector<double>& times, double lo, double hi) {
  if (hi < lo) return 0;
  const auto a = std::lower_bound(times.begin(), times.end(), lo);
  const auto b = std::upper_bound(times.begin(), times.end(), hi);
  return static_cast<std::size_t>(b - a);
}

std::vector<double> honest_times(const ArrivalTrace& honest) {
  std::vector<double> t;
  t.reserve(honest.arrivals.size());
  for (const Arrival& a : honest.arrivals) {
    if (a.origin != Origin::Honest) throw InvalidInput("honest trace has an adversary arrival");
    t.push_back(a.time);
  }
  return t;
}

double calibrated_lambda(const std::vector<BlockTypeSpec>& specs, double delta,
                         std::uint64_t seed) {
  const double rate = total_honest_rate(specs);
  if (!(rate > 0.0)) throw InvalidParameter("honest rate must be positive");
  // Long reference trace: about half a million arrivals.
  const double horizon = 500000.0 / rate;
  const ArrivalTrace trace = generate_typed_trace(
      specs, Origin::Honest, 1, horizon, derive_seed(seed, 0x6C616D6264612D68ull));
  return estimate_lambda_h(build_fully_delayed_chain(trace, delta, specs)).lambda_h;
}

// Window centers q, 3q, 5q, ... with the whole window inside [0, end].
std::vector<double> window_centers(double q, double end) {
  std::vector<double> centers;
  for (std::int64_t k = 0;; ++k) {
    const double center = (2.0 * static_cast<double>(k) + 1.0) * q;
    if (center + q > end) break;
    centers.push_back(center);
  }
  return centers;
}

}  // namespace

ProportionEstimate proportion(std::int64_t successes, std::int64_t n, double level) {
  const Interval ci = wilson_interval(successes, n, level);
  return {static_cast<double>(successes) / static_cast<double>(n), ci.lo, ci.hi, successes, n};
}

RateSummary estimate_lambda_h(const FullyDelayedChain& chain) {
  // Segment 0 runs from genesis, not from a delta-gap, so it is dropped.
  if (chain.renewal_times.size() < 3)
    throw InsufficientData("rate estimate needs at least three delta-gap renewals");
  const std::vector<double> times(chain.renewal_times.begin() + 1, chain.renewal_times.end());
  const std::vector<double> scores(chain.renewal_scores.begin() + 1, chain.renewal_scores.end());
  const RatioEstimate r = ratio_estimate(scores, times);
  return {r.value, r.stderr_, r.n};
}

RateSummary estimate_lambda_h(const std::vector<BlockTypeSpec>& specs, double delta,
                              double horizon, std::uint64_t seed, int n_miners) {
  const ArrivalTrace trace = generate_typed_trace(specs, Origin::Honest, n_miners, horizon, seed);
  return estimate_lambda_h(build_fully_delayed_chain(trace, delta, specs));
}

double lambda_h_closed_form(double h, double delta) {
  if (!(std::isfinite(h) && h > 0.0)) throw InvalidParameter("h must be positive and finite");
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");
  return h / (1.0 + delta * h);
}

namespace {

struct StayTrial {
  bool stayed = false;
  double score_sum = 0.0;
  std::int64_t segments = 0;
};

StayResult stay_common(const std::vector<BlockTypeSpec>& specs, double delta_puncture,
                       double segment_len, double rate, double threshold, bool above,
                       std::int64_t n_trials, double horizon, std::uint64_t seed, int threads,
                       Origin origin, const SegmentScorer& scorer) {
  if (!(std::isfinite(segment_len) && segment_len > 0.0))
    throw InvalidParameter("segment_len must be positive and finite");
  if (n_trials < 1) throw InvalidParameter("n_trials must be at least 1");
  if (!(std::isfinite(horizon) && horizon >= segment_len))
    throw InvalidParameter("horizon must cover at least one segment");

  std::vector<StayTrial> trials(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, threads, [&](std::int64_t i) {
    const ArrivalTrace trace = generate_typed_trace(
        specs, origin, 1, horizon, trial_seed(seed, static_cast<std::uint64_t>(i)));
    const PuncturedTrace punctured = puncture_trace(trace, segment_len, delta_puncture, scorer);
    StayTrial& out = trials[static_cast<std::size_t>(i)];
    out.segments = static_cast<std::int64_t>(punctured.segment_scores.size());
    double z = 0.0;
    bool ok = out.segments > 0;
    for (double s : punctured.segment_scores) {
      out.score_sum += s;
      z += above ? s - threshold : threshold - s;
      if (z <= 0.0) ok = false;
    }
    out.stayed = ok;
  });

  StayResult result;
  result.lambda_h = rate;
  result.threshold = threshold;
  result.segments_per_trial = trials.front().segments;
  std::int64_t stays = 0, segments = 0;
  double sum = 0.0;
  for (const StayTrial& t : trials) {
    stays += t.stayed ? 1 : 0;
    segments += t.segments;
    sum += t.score_sum;
  }
  if (segments == 0) throw InsufficientData("horizon admits no whole segment");
  result.segment_mean = sum / static_cast<double>(segments);
  const bool drift_ok =
      above ? result.segment_mean > threshold : result.segment_mean < threshold;
  if (!drift_ok)
    throw SegmentTooSmall("segment mean " + std::to_string(result.segment_mean) +
                          " does not clear threshold " + std::to_string(threshold));
  result.stay = proportion(stays, n_trials);
  return result;
}

}  // namespace

StayResult estimate_stay_above_probability(const std::vector<BlockTypeSpec>& specs,
                                           double delta, double segment_len, double epsilon,
                                           std::int64_t n_trials, double horizon,
                                           std::uint64_t seed, int threads,
                                           std::optional<double> lambda_h) {
  validate_specs(specs);
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");
  if (!(std::isfinite(epsilon) && epsilon > 0.0))
    throw InvalidParameter("epsilon must be positive and finite");
  const double rate = lambda_h ? *lambda_h : calibrated_lambda(specs, delta, seed);
  const double threshold = segment_len * (rate - epsilon);
  return stay_common(specs, delta, segment_len, rate, threshold, true, n_trials, horizon, seed,
                     threads, Origin::Honest, make_fully_delayed_segment_scorer(specs, delta));
}

StayResult estimate_stay_below_probability(const std::vector<BlockTypeSpec>& specs,
                                           double segment_len, double epsilon,
                                           std::int64_t n_trials, double horizon,
                                           std::uint64_t seed, int threads) {
  validate_specs(specs);
  if (!(std::isfinite(epsilon) && epsilon > 0.0))
    throw InvalidParameter("epsilon must be positive and finite");
  // The adversary's score rate is exact, so no calibration pass is needed.
  const double rate = adversary_score_rate(specs);
  const double threshold = segment_len * (rate + epsilon);
  const SegmentScorer scorer = [&specs](std::span<const Arrival> segment, double) {
    double s = 0.0;
    for (const Arrival& a : segment) s += score_of(specs, a.type_id);
    return s;
  };
  return stay_common(specs, 0.0, segment_len, rate, threshold, false, n_trials, horizon, seed,
                     threads, Origin::Adversary, scorer);
}

IntervalVerdict check_interval(const NakamotoIntervalQuery& query, const ArrivalTrace& honest,
                               const ArrivalTrace& adversary,
                               const std::vector<BlockTypeSpec>& specs) {
  validate_specs(specs);
  if (!(std::isfinite(query.tau_q) && query.tau_q >= 0.0))
    throw InvalidQuery("tau_q must be nonnegative and finite");
  if (!(std::isfinite(query.q) && query.q > 0.0))
    throw InvalidQuery("q must be positive and finite");
  if (!(std::isfinite(query.delta) && query.delta >= 0.0))
    throw InvalidQuery("delta must be nonnegative and finite");

  const double q = query.q, delta = query.delta;
  const double lo = query.tau_q - q, hi = query.tau_q + q;
  const std::vector<double> h_times = honest_times(honest);
  const AdversaryIndex adv = index_adversary(adversary, specs);

  IntervalVerdict verdict;
  verdict.tau_q = query.tau_q;
  verdict.q = q;

  // The loner event: one honest arrival in the window, clear margins around.
  const std::size_t inner = count_in_closed(h_times, lo, hi);
  const std::size_t padded = count_in_closed(h_times, lo - delta, hi + delta);
  const std::size_t hostile = count_in_closed(adv.times, lo - 2.0 * delta, hi + 2.0 * delta);
  verdict.l_q = inner == 1 && padded == 1 && hostile == 0;
  if (verdict.l_q) {
    const auto it = std::lower_bound(h_times.begin(), h_times.end(), lo);
    verdict.nakamoto_block_index = static_cast<std::size_t>(it - h_times.begin());
    verdict.nakamoto_time = *it;
  }

  const FullyDelayedChain chain = build_fully_delayed_chain(honest, delta, specs);

  // Pre-window race: every root must already be outrun where the adversary
  // scored at all.  Roots with no adversary arrival after them pass
  // vacuously, which makes the condition depend only on arrivals before the
  // window margins.
  {
    const double adv_end = lo - 2.0 * delta;
    const double growth_end = lo - delta;
    const auto last = std::upper_bound(adv.times.begin(), adv.times.end(), adv_end);
    if (last == adv.times.begin()) {
      verdict.e1 = true;
    } else {
      const double t_last = *(last - 1);
      const double rhs =
          chain.score_at(growth_end) - adversary_cumulative(adv.times, adv.prefix, adv_end);
      bool ok = true;
      const double g0 =
          chain.score_at(delta) - adversary_cumulative(adv.times, adv.prefix, 0.0);
      if (t_last > 0.0 && !(rhs > g0)) ok = false;  // genesis root
      for (std::size_t i = 0; ok && i < h_times.size(); ++i) {
        const double tau = h_times[i];
        if (tau >= t_last) break;
        const double g =
            chain.score_at(tau + delta) - adversary_cumulative(adv.times, adv.prefix, tau);
        if (!(rhs > g)) ok = false;
      }
      verdict.e1 = ok;
    }
  }

  // Post-window race: honest growth restarted from scratch after the window
  // margin must stay strictly ahead of the adversary at each of its
  // arrivals through the horizon.
  {
    const double start = hi + delta;
    const double adv_start = hi + 2.0 * delta;
    const double horizon = std::max(honest.horizon, adversary.horizon);
    ArrivalTrace tail;
    tail.horizon = honest.horizon;
    const auto first = std::upper_bound(
        honest.arrivals.begin(), honest.arrivals.end(), start,
        [](double t, const Arrival& a) { return t < a.time; });
    tail.arrivals.assign(first, honest.arrivals.end());
    const FullyDelayedChain fresh = build_fully_delayed_chain(tail, delta, specs);
    bool ok = true;
    const double base = adversary_cumulative(adv.times, adv.prefix, adv_start);
    for (std::size_t i = 0; i < adv.times.size(); ++i) {
      const double t = adv.times[i];
      if (t <= adv_start) continue;
      if (t > horizon) break;
      if (!(fresh.score_at(t - delta) > adv.prefix[i] - base)) {
        ok = false;
        break;
      }
    }
    verdict.e2_at_horizon = ok;
  }

  verdict.is_nakamoto_at_horizon = verdict.l_q && verdict.e1 && verdict.e2_at_horizon;
  return verdict;
}

bool verify_persistence(const BlockTree& tree, const IntervalVerdict& verdict) {
  if (!verdict.is_nakamoto_at_horizon || !verdict.nakamoto_block_index)
    throw InvalidInput("persistence check needs a flagged verdict");
  const std::size_t index = *verdict.nakamoto_block_index;
  if (index >= tree.honest_block_ids().size())
    throw InvalidInput("verdict does not match the tree");
  const std::int64_t flagged = tree.honest_block_id(index);
  if (tree.block(flagged).mine_time != verdict.nakamoto_time)
    throw InvalidInput("verdict does not match the tree");

  // One pass marks every block whose chain contains the flagged block.
  std::vector<char> contains(tree.size(), 0);
  contains[static_cast<std::size_t>(flagged)] = 1;
  for (std::size_t id = static_cast<std::size_t>(flagged) + 1; id < tree.size(); ++id) {
    const std::int64_t parent = tree.block(static_cast<std::int64_t>(id)).parent;
    contains[id] = contains[static_cast<std::size_t>(parent)];
  }

  const int n_miners = tree.n_miners();
  for (const Block& b : tree.blocks()) {
    for (int m = 0; m < n_miners; ++m) {
      const double t = tree.visible_at(b.id, m);
      if (t == kNever || t < verdict.tau_q || t > tree.horizon()) continue;
      if (t < tree.visible_at(flagged, m)) continue;  // not yet delivered here
      if (!contains[static_cast<std::size_t>(tree.tip(t, m))]) return false;
    }
  }
  return true;
}

NakamotoProbability estimate_nakamoto_probability(const std::vector<BlockTypeSpec>& specs,
                                                  double delta, double q,
                                                  std::int64_t n_trials, double horizon,
                                                  std::uint64_t seed, int threads,
                                                  std::optional<double> tau_q) {
  validate_specs(specs);
  if (n_trials < 1) throw InvalidParameter("n_trials must be at least 1");
  const double center = tau_q ? *tau_q : horizon / 2.0;
  if (!(center - q >= 0.0 && center + q <= horizon))
    throw InvalidParameter("query window must lie inside the horizon");

  struct Counts {
    bool l = false, e1 = false, e2 = false;
  };
  std::vector<Counts> trials(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, threads, [&](std::int64_t i) {
    const std::uint64_t u = static_cast<std::uint64_t>(i);
    const ArrivalTrace honest =
        generate_typed_trace(specs, Origin::Honest, 1, horizon, trial_seed(seed, 2 * u));
    const ArrivalTrace adversary =
        generate_typed_trace(specs, Origin::Adversary, 1, horizon, trial_seed(seed, 2 * u + 1));
    const IntervalVerdict v = check_interval({center, q, delta}, honest, adversary, specs);
    trials[static_cast<std::size_t>(i)] = {v.l_q, v.e1, v.e2_at_horizon};
  });

  std::int64_t nl = 0, ne1 = 0, ne2 = 0, nj = 0;
  for (const Counts& c : trials) {
    nl += c.l ? 1 : 0;
    ne1 += c.e1 ? 1 : 0;
    ne2 += c.e2 ? 1 : 0;
    nj += (c.l && c.e1 && c.e2) ? 1 : 0;
  }
  NakamotoProbability out;
  out.p_joint = proportion(nj, n_trials);
  out.p_l = proportion(nl, n_trials);
  out.p_e1 = proportion(ne1, n_trials);
  out.p_e2 = proportion(ne2, n_trials);
  const double product = out.p_l.estimate * out.p_e1.estimate * out.p_e2.estimate;
  out.independence_gap = std::abs(out.p_joint.estimate - product);
  auto half = [](const ProportionEstimate& p) { return (p.ci_high - p.ci_low) / 2.0; };
  out.independence_band = half(out.p_joint) +
                          half(out.p_l) * out.p_e1.estimate * out.p_e2.estimate +
                          out.p_l.estimate * half(out.p_e1) * out.p_e2.estimate +
                          out.p_l.estimate * out.p_e1.estimate * half(out.p_e2);
  out.tau_q = center;
  out.horizon = horizon;
  return out;
}

BlockClass classify_block(const BlockTree& tree, const ArrivalTrace& honest,
                          const ArrivalTrace& adversary, const FullyDelayedChain& chain,
                          const std::vector<BlockTypeSpec>& specs, std::int64_t block_id,
                          double t_cap) {
  const Block& b = tree.block(block_id);
  if (b.id == kGenesisId || b.origin != Origin::Honest)
    throw InvalidQuery("classification applies to honest non-genesis blocks");
  const std::vector<double> h_times = honest_times(honest);
  const auto& ids = tree.honest_block_ids();
  const auto pos = std::lower_bound(ids.begin(), ids.end(), block_id);
  if (pos == ids.end() || *pos != block_id)
    throw InvalidInput("block does not correspond to an honest arrival");
  const std::size_t index = static_cast<std::size_t>(pos - ids.begin());
  const double t = h_times[index];
  const double delta = chain.delta;

  const bool before_clear = index == 0 || h_times[index - 1] <= t - delta;
  const bool after_clear = index + 1 == h_times.size() || h_times[index + 1] >= t + delta;
  if (!(before_clear && after_clear)) return BlockClass::Conflicted;

  const AdversaryIndex adv = index_adversary(adversary, specs);
  const double horizon = std::max(honest.horizon, adversary.horizon);

  // A chain rooted at tau_r that catches the restarted honest growth by u
  // beats the block; its time length is u - tau_r.
  bool beaten_any = false, beaten_capped = false;
  auto race = [&](double tau_r) {
    const double a0 = adversary_cumulative(adv.times, adv.prefix, tau_r);
    const double s0 = chain.score_at(tau_r + delta);
    for (std::size_t i = 0; i < adv.times.size(); ++i) {
      const double u = adv.times[i];
      if (u <= tau_r) continue;
      if (u > horizon) break;
      const double lead = (chain.score_at(u - delta) - s0) - (adv.prefix[i] - a0);
      if (lead <= 0.0) {
        beaten_any = true;
        if (u - tau_r <= t_cap) beaten_capped = true;
      }
    }
  };
  race(0.0);
  for (std::size_t i = 0; i < index && h_times[i] < t; ++i) race(h_times[i]);

  if (t_cap != kNever && beaten_capped) return BlockClass::LocallyInsecure;
  if (beaten_any) return BlockClass::Overtakable;
  return BlockClass::Secure;
}

namespace {

DecayFit finish_decay(const std::vector<double>& lengths, std::vector<std::int64_t> successes,
                      std::int64_t n_trials) {
  DecayFit out;
  out.lengths = lengths;
  out.successes = std::move(successes);
  out.n_trials = n_trials;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double p =
        static_cast<double>(out.successes[i]) / static_cast<double>(n_trials);
    out.probabilities.push_back(p);
    if (out.successes[i] > 0) {
      xs.push_back(lengths[i]);
      ys.push_back(std::log(p));
    } else {
      out.dropped_lengths.push_back(lengths[i]);
    }
  }
  out.fit = ols_fit(xs, ys);
  return out;
}

}  // namespace

DecayFit estimate_no_nakamoto_decay(const std::vector<BlockTypeSpec>& specs, double delta,
                                    double q, const std::vector<double>& lengths,
                                    std::int64_t n_trials, std::uint64_t seed, int threads) {
  validate_specs(specs);
  if (!(std::isfinite(q) && q > 0.0)) throw InvalidParameter("q must be positive and finite");
  if (lengths.size() < 3) throw InvalidParameter("decay fit needs at least three lengths");
  for (double len : lengths)
    if (!(std::isfinite(len) && len >= 2.0 * q))
      throw InvalidParameter("each length must cover at least one window");
  if (n_trials < 1) throw InvalidParameter("n_trials must be at least 1");
  const double max_len = *std::max_element(lengths.begin(), lengths.end());
  // One horizon for every length keeps the per-window verdicts shared, so
  // the per-trial events nest exactly.
  const double horizon = max_len + 20.0 * (q + delta);
  const std::vector<double> centers = window_centers(q, max_len);

  // Per trial: the end of the first Nakamoto window, or infinity.
  std::vector<double> first_nakamoto(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, threads, [&](std::int64_t i) {
    const std::uint64_t u = static_cast<std::uint64_t>(i);
    const ArrivalTrace honest =
        generate_typed_trace(specs, Origin::Honest, 1, horizon, trial_seed(seed, 2 * u));
    const ArrivalTrace adversary =
        generate_typed_trace(specs, Origin::Adversary, 1, horizon, trial_seed(seed, 2 * u + 1));
    double first = kNever;
    for (double center : centers) {
      const IntervalVerdict v =
          check_interval({center, q, delta}, honest, adversary, specs);
      if (v.is_nakamoto_at_horizon) {
        first = center + q;
        break;
      }
    }
    first_nakamoto[static_cast<std::size_t>(i)] = first;
  });

  std::vector<std::int64_t> successes(lengths.size(), 0);
  for (double first : first_nakamoto)
    for (std::size_t j = 0; j < lengths.size(); ++j)
      if (first > lengths[j]) ++successes[j];
  return finish_decay(lengths, std::move(successes), n_trials);
}

DecayFit estimate_overtake_decay(const std::vector<BlockTypeSpec>& specs, double delta,
                                 double observation_window, const std::vector<double>& tprimes,
                                 std::int64_t n_trials, std::uint64_t seed, int threads) {
  validate_specs(specs);
  if (!(std::isfinite(observation_window) && observation_window > 0.0))
    throw InvalidParameter("observation window must be positive and finite");
  if (tprimes.size() < 3) throw InvalidParameter("decay fit needs at least three lengths");
  for (double tp : tprimes)
    if (!(std::isfinite(tp) && tp > 0.0))
      throw InvalidParameter("each chain length must be positive and finite");
  if (n_trials < 1) throw InvalidParameter("n_trials must be at least 1");
  const double max_tp = *std::max_element(tprimes.begin(), tprimes.end());
  const double horizon = observation_window + max_tp + 10.0 * delta;

  // Per trial: the longest time length of any catching chain rooted before
  // an observed honest block, or -infinity when none catches.
  std::vector<double> best_len(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, threads, [&](std::int64_t i) {
    const std::uint64_t u = static_cast<std::uint64_t>(i);
    const ArrivalTrace honest =
        generate_typed_trace(specs, Origin::Honest, 1, horizon, trial_seed(seed, 2 * u));
    const ArrivalTrace adversary =
        generate_typed_trace(specs, Origin::Adversary, 1, horizon, trial_seed(seed, 2 * u + 1));
    const FullyDelayedChain chain = build_fully_delayed_chain(honest, delta, specs);
    const AdversaryIndex adv = index_adversary(adversary, specs);
    const std::vector<double> h_times = honest_times(honest);

    double best = -kNever;
    if (!adv.times.empty()) {
      // f(u) = adversary cumulative minus matured honest growth; a root at
      // tau_r is caught at u iff f(u) >= f-like baseline g(tau_r).
      const std::size_t na = adv.times.size();
      std::vector<double> f(na), suffix(na);
      for (std::size_t k = 0; k < na; ++k)
        f[k] = adv.prefix[k] - chain.score_at(adv.times[k] - delta);
      suffix[na - 1] = f[na - 1];
      for (std::size_t k = na - 1; k-- > 0;) suffix[k] = std::max(f[k], suffix[k + 1]);

      auto latest_catch = [&](double tau_r) {
        const double g = adversary_cumulative(adv.times, adv.prefix, tau_r) -
                         chain.score_at(tau_r + delta);
        // First arrival strictly after the root.
        std::size_t lo = static_cast<std::size_t>(
            std::upper_bound(adv.times.begin(), adv.times.end(), tau_r) - adv.times.begin());
        if (lo >= na || suffix[lo] < g) return;
        // Last index whose suffix max still clears g is the last catch.
        std::size_t hi = na - 1;
        while (lo < hi) {
          const std::size_t mid = lo + (hi - lo + 1) / 2;
          if (suffix[mid] >= g) {
            lo = mid;
          } else {
            hi = mid - 1;
          }
        }
        best = std::max(best, adv.times[lo] - tau_r);
      };

      // Roots must precede some honest block inside the observation window.
      const auto in_window = std::upper_bound(h_times.begin(), h_times.end(),
                                              observation_window);
      if (in_window != h_times.begin()) {
        latest_catch(0.0);
        const std::size_t observed = static_cast<std::size_t>(in_window - h_times.begin());
        for (std::size_t k = 0; k + 1 < observed; ++k) latest_catch(h_times[k]);
      }
    }
    best_len[static_cast<std::size_t>(i)] = best;
  });

  std::vector<std::int64_t> successes(tprimes.size(), 0);
  for (double best : best_len)
    for (std::size_t j = 0; j < tprimes.size(); ++j)
      if (best >= tprimes[j]) ++successes[j];
  return finish_decay(tprimes, std::move(successes), n_trials);
}

CounterexampleStats race_stats(const std::vector<int>& steps, double level) {
  if (steps.size() < 2) throw InsufficientData("race needs at least two steps");
  std::int64_t minus = 0, after_plus = 0, minus_after_plus = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] != 1 && steps[i] != -1) throw InvalidInput("race steps must be +1 or -1");
    if (steps[i] == -1) ++minus;
    if (i > 0 && steps[i - 1] == 1) {
      ++after_plus;
      if (steps[i] == -1) ++minus_after_plus;
    }
  }
  if (after_plus == 0) throw InsufficientData("race has no step preceded by +1");
  CounterexampleStats out;
  out.p_cond = proportion(minus_after_plus, after_plus, level);
  out.p_marg = proportion(minus, static_cast<std::int64_t>(steps.size()), level);
  out.n_steps = static_cast<std::int64_t>(steps.size());
  out.dependence_gap = out.p_cond.estimate - out.p_marg.estimate;
  return out;
}

CounterexampleStats run_counterexample(double h, double b, double delta,
                                       std::int64_t n_steps, std::uint64_t seed) {
  if (!(std::isfinite(h) && h > 0.0)) throw InvalidParameter("h must be positive and finite");
  if (!(std::isfinite(b) && b > 0.0)) throw InvalidParameter("b must be positive and finite");
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");
  if (n_steps < 2) throw InvalidParameter("n_steps must be at least 2");

  // +1 = next fully-delayed extension, -1 = adversary arrival.  After an
  // extension at e the next one is the first honest arrival at or past
  // e + delta, which by memorylessness is e + delta + Exp(h).
  Rng rng(seed);
  std::vector<int> steps;
  steps.reserve(static_cast<std::size_t>(n_steps));
  double next_ext = rng.exponential(h);
  double next_adv = rng.exponential(b);
  while (static_cast<std::int64_t>(steps.size()) < n_steps) {
    if (next_adv < next_ext) {
      steps.push_back(-1);
      next_adv += rng.exponential(b);
    } else {
      steps.push_back(1);
      next_ext += delta + rng.exponential(h);
    }
  }
  return race_stats(steps, 0.99);
}

PersistenceSummary run_persistence_trials(const std::vector<BlockTypeSpec>& specs,
                                          double delta, double q, double horizon,
                                          std::string_view strategy_name,
                                          std::int64_t n_trials, std::uint64_t seed,
                                          int n_miners, int threads) {
  validate_specs(specs);
  if (!(std::isfinite(q) && q > 0.0)) throw InvalidParameter("q must be positive and finite");
  if (n_trials < 1) throw InvalidParameter("n_trials must be at least 1");
  make_strategy(strategy_name);  // reject bad names before spawning trials

  struct Tally {
    std::int64_t windows = 0, flagged = 0, failures = 0;
  };
  std::vector<Tally> tallies(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, threads, [&](std::int64_t i) {
    const std::uint64_t u = static_cast<std::uint64_t>(i);
    const ArrivalTrace honest = generate_typed_trace(specs, Origin::Honest, n_miners, horizon,
                                                     trial_seed(seed, 2 * u));
    const ArrivalTrace adversary = generate_typed_trace(specs, Origin::Adversary, n_miners,
                                                        horizon, trial_seed(seed, 2 * u + 1));
    const auto strategy = make_strategy(strategy_name);
    const auto [tree, outcome] =
        run_with_strategy(*strategy, honest, adversary, specs, delta, n_miners);
    (void)outcome;
    Tally& tally = tallies[static_cast<std::size_t>(i)];
    for (double center : window_centers(q, horizon)) {
      const IntervalVerdict v = check_interval({center, q, delta}, honest, adversary, specs);
      ++tally.windows;
      if (!v.is_nakamoto_at_horizon) continue;
      ++tally.flagged;
      if (!verify_persistence(tree, v)) ++tally.failures;
    }
  });

  PersistenceSummary out;
  out.n_trials = n_trials;
  for (const Tally& t : tallies) {
    out.windows_checked += t.windows;
    out.flagged += t.flagged;
    out.failures += t.failures;
  }
  return out;
}

}  // namespace forksim
