// Estimators and checkers built on top of the simulator: growth rates,
// random-walk positivity, loner-interval verdicts, persistence, block
// classification, decay fits, and the dependent-race demonstration.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "forksim/adversary.hpp"
#include "forksim/blocktree.hpp"
#include "forksim/fully_delayed.hpp"
#include "forksim/stats.hpp"
#include "forksim/types.hpp"

namespace forksim {

// A binomial proportion with its Wilson confidence interval.
struct ProportionEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t successes = 0;
  std::int64_t n = 0;
};

ProportionEstimate proportion(std::int64_t successes, std::int64_t n, double level = 0.95);

// Honest score growth rate from the delta-gap renewal decomposition of a
// fully-delayed chain.  Segment 0 (genesis to the first gap end) is
// discarded.  Throws InsufficientData with fewer than 2 usable segments.
struct RateSummary {
  double lambda_h = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_renewals = 0;
};
RateSummary estimate_lambda_h(const FullyDelayedChain& chain);

// Convenience: generate one honest trace and estimate lambda_h from it.
RateSummary estimate_lambda_h(const std::vector<BlockTypeSpec>& specs, double delta,
                              double horizon, std::uint64_t seed, int n_miners = 10);

// Closed form h / (1 + delta * h) for a single-type spec; general specs have
// no closed form and must be estimated.
double lambda_h_closed_form(double h, double delta);

// Probability that the segment random walk
//   Z[n] = sum_{i<=n} (S_i - segment_len * (lambda_h - epsilon))
// stays strictly positive through the last whole segment of the horizon.
// Trials are independent honest traces.  lambda_h is calibrated internally
// from a long reference trace unless provided.  Throws SegmentTooSmall if
// the empirical segment mean does not exceed the threshold.
struct StayResult {
  ProportionEstimate stay;
  double lambda_h = 0.0;
  double threshold = 0.0;     // segment_len * (lambda_h - epsilon)
  double segment_mean = 0.0;  // pooled empirical mean of segment scores
  std::int64_t segments_per_trial = 0;
};
StayResult estimate_stay_above_probability(const std::vector<BlockTypeSpec>& specs,
                                           double delta, double segment_len, double epsilon,
                                           std::int64_t n_trials, double horizon,
                                           std::uint64_t seed, int threads = 1,
                                           std::optional<double> lambda_h = std::nullopt);

// Mirror bound for the adversary: probability that
//   Z[n] = sum_{i<=n} (segment_len * (lambda_a + epsilon) - A_i)
// stays strictly positive, where A_i is the adversary score in segment i.
StayResult estimate_stay_below_probability(const std::vector<BlockTypeSpec>& specs,
                                           double segment_len, double epsilon,
                                           std::int64_t n_trials, double horizon,
                                           std::uint64_t seed, int threads = 1);

// A loner-interval query centered at tau_q with half-width q.
struct NakamotoIntervalQuery {
  double tau_q = 0.0;
  double q = 0.0;
  double delta = 0.0;
};

struct IntervalVerdict {
  bool l_q = false;
  bool e1 = false;
  bool e2_at_horizon = false;
  bool is_nakamoto_at_horizon = false;
  // Honest arrival index of the in-window block when l_q holds.
  std::optional<std::size_t> nakamoto_block_index;
  double nakamoto_time = 0.0;  // arrival time of that block
  // Echo of the query, carried along for downstream checks.
  double tau_q = 0.0;
  double q = 0.0;
};

// Evaluates the three interval events on a pair of traces.
//
// l_q: exactly one honest arrival in [tau_q - q, tau_q + q], no other honest
// arrival in [tau_q - q - delta, tau_q + q + delta], and no adversary arrival
// in [tau_q - q - 2*delta, tau_q + q + 2*delta].
//
// e1: for the genesis root and every honest arrival i with
// tau_i < tau_q - q - 2*delta, the fully-delayed growth on
// (tau_i + delta, tau_q - q - delta] strictly exceeds the adversary score on
// (tau_i, tau_q - q - 2*delta] whenever that adversary score is positive.
//
// e2_at_horizon: at every adversary arrival t in (tau_q + q + 2*delta,
// horizon], the fully-delayed growth of the honest arrivals after
// tau_q + q + delta, measured on (tau_q + q + delta, t - delta], strictly
// exceeds the adversary score on (tau_q + q + 2*delta, t].  Both sides are
// step functions, so these event times are the only ones where the
// comparison can newly fail.
//
// e1 and e2 are functions of arrivals outside the loner intervals only; l_q
// is a function of arrivals inside them.
IntervalVerdict check_interval(const NakamotoIntervalQuery& query, const ArrivalTrace& honest,
                               const ArrivalTrace& adversary,
                               const std::vector<BlockTypeSpec>& specs);

// True iff the flagged block is an ancestor of every honest miner's
// fork-choice tip at every visibility event in [tau_q, horizon], skipping
// (miner, time) pairs where the block has not yet been delivered to that
// miner.  Requires verdict.is_nakamoto_at_horizon; throws InvalidInput on a
// verdict/tree mismatch.
bool verify_persistence(const BlockTree& tree, const IntervalVerdict& verdict);

// Monte Carlo estimate of P(L), P(E1), P(E2) and their conjunction at a
// fixed query center over independent trace pairs.
struct NakamotoProbability {
  ProportionEstimate p_joint;
  ProportionEstimate p_l;
  ProportionEstimate p_e1;
  ProportionEstimate p_e2;
  double independence_gap = 0.0;   // |p_joint - p_l * p_e1 * p_e2|
  double independence_band = 0.0;  // CI half-width sum the gap is compared to
  double tau_q = 0.0;
  double horizon = 0.0;
};
NakamotoProbability estimate_nakamoto_probability(const std::vector<BlockTypeSpec>& specs,
                                                  double delta, double q,
                                                  std::int64_t n_trials, double horizon,
                                                  std::uint64_t seed, int threads = 1,
                                                  std::optional<double> tau_q = std::nullopt);

enum class BlockClass { Secure, Conflicted, Overtakable, LocallyInsecure };

// Classifies an honest block of a finished run.
//   Conflicted: not a loner.
//   LocallyInsecure: a loner, but some adversary chain rooted at a prior
//     honest block (or genesis) with time length <= t_cap matches or beats
//     the fully-delayed growth on the paired interval by the horizon.
//   Overtakable: as above with unbounded time length.
//   Secure: none of the above.
// t_cap = infinity collapses LocallyInsecure into Overtakable.
BlockClass classify_block(const BlockTree& tree, const ArrivalTrace& honest,
                          const ArrivalTrace& adversary, const FullyDelayedChain& chain,
                          const std::vector<BlockTypeSpec>& specs, std::int64_t block_id,
                          double t_cap = kNever);

// Log-linear decay fit over interval lengths.
struct DecayFit {
  std::vector<double> lengths;
  std::vector<double> probabilities;
  std::vector<std::int64_t> successes;
  std::int64_t n_trials = 0;
  LinearFit fit;                      // log p vs length
  std::vector<double> dropped_lengths;  // lengths with p = 0, excluded from fit
};

// P(no Nakamoto interval among the consecutive non-overlapping windows of
// half-width q tiling the first `length` seconds after a fixed start).
// Larger lengths add windows, so the per-trial events nest.
DecayFit estimate_no_nakamoto_decay(const std::vector<BlockTypeSpec>& specs, double delta,
                                    double q, const std::vector<double>& lengths,
                                    std::int64_t n_trials, std::uint64_t seed,
                                    int threads = 1);

// P(some honest block mined in a fixed observation window is matched or
// beaten by an adversary chain of time length >= t' by the horizon), for
// each t' in `tprimes`.
DecayFit estimate_overtake_decay(const std::vector<BlockTypeSpec>& specs, double delta,
                                 double observation_window, const std::vector<double>& tprimes,
                                 std::int64_t n_trials, std::uint64_t seed, int threads = 1);

// The +1/-1 race between fully-delayed honest chain extensions and adversary
// arrivals.  p_cond conditions on the previous step being +1.
struct CounterexampleStats {
  ProportionEstimate p_cond;  // P(step = -1 | previous step = +1)
  ProportionEstimate p_marg;  // P(step = -1)
  std::int64_t n_steps = 0;
  double dependence_gap = 0.0;  // p_cond - p_marg
};

// Counts p_cond / p_marg over a +1/-1 step sequence.
CounterexampleStats race_stats(const std::vector<int>& steps, double level = 0.99);

// Simulates the race at rates (h, b) with delay delta for n_steps steps.
CounterexampleStats run_counterexample(double h, double b, double delta,
                                       std::int64_t n_steps, std::uint64_t seed);

// One adversarial run plus a scan of loner windows: every window flagged
// Nakamoto must pass verify_persistence.
struct PersistenceSummary {
  std::int64_t n_trials = 0;
  std::int64_t windows_checked = 0;
  std::int64_t flagged = 0;
  std::int64_t failures = 0;
};
PersistenceSummary run_persistence_trials(const std::vector<BlockTypeSpec>& specs,
                                          double delta, double q, double horizon,
                                          std::string_view strategy_name,
                                          std::int64_t n_trials, std::uint64_t seed,
                                          int n_miners = 10, int threads = 1);

}  // namespace forksim
