#include "forksim/fully_delayed.hpp"

#include <algorithm>
#include <cmath>

namespace forksim {

double FullyDelayedChain::score_at(double t) const {
  // Last jump at or before t.
  auto it = std::upper_bound(jumps.begin(), jumps.end(), t,
                             [](double x, const Jump& j) { return x < j.time; });
  if (it == jumps.begin()) return 0.0;
  return std::prev(it)->score;
}

double FullyDelayedChain::growth(double a, double b) const {
  if (!(a <= b)) throw InvalidInterval("growth: interval end precedes start");
  return score_at(b) - score_at(a);
}

FullyDelayedChain build_fully_delayed_chain(const ArrivalTrace& honest, double delta,
                                            const std::vector<BlockTypeSpec>& specs) {
  validate_specs(specs);
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");

  FullyDelayedChain chain;
  chain.delta = delta;
  chain.horizon = honest.horizon;

  const auto& arr = honest.arrivals;
  const std::size_t n = arr.size();
  chain.block_scores.resize(n);
  chain.parents.assign(n, -1);

  // Best matured block: the fork-choice winner among blocks mined at least
  // delta ago.  Genesis (score 0, index -1) is always matured.
  double best_score = 0.0;
  std::int64_t best_index = -1;
  std::size_t matured = 0;
  double max_score = 0.0;
  std::int64_t max_index = -1;

  for (std::size_t j = 0; j < n; ++j) {
    const double t = arr[j].time;
    if (arr[j].origin != Origin::Honest)
      throw InvalidInput("fully-delayed chain expects an honest trace");
    while (matured < j && arr[matured].time + delta <= t) {
      // Ties prefer the earlier arrival; strict > keeps that automatically.
      if (chain.block_scores[matured] > best_score) {
        best_score = chain.block_scores[matured];
        best_index = static_cast<std::int64_t>(matured);
      }
      ++matured;
    }
    chain.parents[j] = best_index;
    chain.block_scores[j] = best_score + score_of(specs, arr[j].type_id);
    if (chain.block_scores[j] > max_score) {
      max_score = chain.block_scores[j];
      max_index = static_cast<std::int64_t>(j);
      chain.jumps.push_back({t, max_score});
    }
  }

  // Canonical chain at the horizon: ancestry of the highest-score block.
  for (std::int64_t i = max_index; i >= 0; i = chain.parents[i])
    chain.chain.push_back(static_cast<std::size_t>(i));
  std::reverse(chain.chain.begin(), chain.chain.end());

  // Delta-gaps and the renewal decomposition.
  for (std::size_t j = 0; j < n; ++j) {
    const bool gap = (j + 1 == n) || (arr[j + 1].time > arr[j].time + delta);
    if (gap && arr[j].time + delta <= honest.horizon)
      chain.gap_ends.push_back(arr[j].time + delta);
  }
  double prev_end = 0.0;
  double prev_score = 0.0;
  for (double e : chain.gap_ends) {
    const double s = chain.score_at(e);
    chain.renewal_times.push_back(e - prev_end);
    chain.renewal_scores.push_back(s - prev_score);
    prev_end = e;
    prev_score = s;
  }
  return chain;
}

double score_growth(const FullyDelayedChain& chain, double a, double b) {
  return chain.growth(a, b);
}

double adversary_score_growth(const ArrivalTrace& adversary, double a, double b,
                              const std::vector<BlockTypeSpec>& specs) {
  if (!(a <= b)) throw InvalidInterval("adversary_score_growth: end precedes start");
  const auto& arr = adversary.arrivals;
  auto lo = std::upper_bound(arr.begin(), arr.end(), a,
                             [](double x, const Arrival& v) { return x < v.time; });
  double total = 0.0;
  for (auto it = lo; it != arr.end() && it->time <= b; ++it) {
    if (it->origin != Origin::Adversary)
      throw InvalidInput("adversary_score_growth expects an adversary trace");
    total += score_of(specs, it->type_id);
  }
  return total;
}

std::vector<std::size_t> find_loners(const ArrivalTrace& honest, double delta) {
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");
  const auto& arr = honest.arrivals;
  std::vector<std::size_t> loners;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const bool clear_before = (i == 0) || (arr[i - 1].time <= arr[i].time - delta);
    const bool clear_after = (i + 1 == arr.size()) || (arr[i + 1].time >= arr[i].time + delta);
    if (clear_before && clear_after) loners.push_back(i);
  }
  return loners;
}

SegmentScorer make_fully_delayed_segment_scorer(const std::vector<BlockTypeSpec>& specs,
                                                double delta) {
  return [specs, delta](std::span<const Arrival> segment, double segment_start) {
    ArrivalTrace local;
    local.arrivals.reserve(segment.size());
    for (const Arrival& a : segment) {
      Arrival shifted = a;
      shifted.time = a.time - segment_start;
      local.arrivals.push_back(shifted);
    }
    local.horizon = local.arrivals.empty() ? 0.0 : local.arrivals.back().time;
    return build_fully_delayed_chain(local, delta, specs).final_score();
  };
}

}  // namespace forksim
