// The fully-delayed honest chain: the fictitious chain obtained by delivering
// every honest block exactly delta late to everyone.  Its score growth lower
// bounds the honest score growth under any legal delay schedule, and its
// delta-gap structure yields i.i.d. renewal segments.
#pragma once

#include <cstdint>
#include <vector>

#include "forksim/arrivals.hpp"
#include "forksim/types.hpp"

namespace forksim {

struct FullyDelayedChain {
  // A jump of the running maximum chain score: at `time` the best score
  // reached `score`.  Times strictly increase, scores strictly increase.
  struct Jump {
    double time = 0.0;
    double score = 0.0;
  };

  double delta = 0.0;
  double horizon = 0.0;

  std::vector<Jump> jumps;

  // Arrival indices (into the source trace) forming the canonical chain at
  // the horizon, genesis excluded, in chain order.
  std::vector<std::size_t> chain;

  // Per-arrival chain data, indexed like the source trace.
  std::vector<double> block_scores;        // chain score of each block
  std::vector<std::int64_t> parents;       // arrival index of parent, -1 = genesis

  // End times (arrival + delta) of delta-gap blocks, within the horizon.
  std::vector<double> gap_ends;

  // Renewal decomposition: renewal_times[0] / renewal_scores[0] cover genesis
  // to the first gap end; entry n >= 1 covers gap end n-1 to gap end n.
  std::vector<double> renewal_times;
  std::vector<double> renewal_scores;

  // Score of the chain at time t: max chain score over blocks mined at or
  // before t.  Right-continuous, nondecreasing, 0 before the first jump.
  double score_at(double t) const;

  // Score growth on (a, b]; throws InvalidInterval if b < a.
  double growth(double a, double b) const;

  double final_score() const { return jumps.empty() ? 0.0 : jumps.back().score; }
};

// Builds the fully-delayed chain of an honest trace.  Visibility ignores
// miner identity: a block mined at s is usable by a block mined at t iff
// s + delta <= t.  Fork choice takes the highest-score visible block, ties
// broken toward the earlier arrival.
FullyDelayedChain build_fully_delayed_chain(const ArrivalTrace& honest, double delta,
                                            const std::vector<BlockTypeSpec>& specs);

// Score growth of the chain on (a, b].
double score_growth(const FullyDelayedChain& chain, double a, double b);

// Adversary score accumulated on (a, b]: sum of score(type) over adversary
// arrivals in the interval.  Pure bookkeeping; no chain is built.
double adversary_score_growth(const ArrivalTrace& adversary, double a, double b,
                              const std::vector<BlockTypeSpec>& specs);

// Indices of honest arrivals with no other honest arrival in the open
// interval (t - delta, t + delta).
std::vector<std::size_t> find_loners(const ArrivalTrace& honest, double delta);

// Segment scorer for puncture_trace: scores a segment by the final score of
// the fully-delayed chain built from the segment's arrivals alone.
SegmentScorer make_fully_delayed_segment_scorer(const std::vector<BlockTypeSpec>& specs,
                                                double delta);

}  // namespace forksim
