// Attack strategies and the event-driven runner that executes them against
// a pair of arrival traces, producing the resulting block tree and outcome.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forksim/blocktree.hpp"
#include "forksim/types.hpp"

namespace forksim {

// Read-only view of the run handed to a strategy at each event.  A strategy
// may only look backward: everything here is determined by arrivals at or
// before the current event time.
class RunView {
 public:
  virtual ~RunView() = default;
  virtual double now() const = 0;
  virtual int n_miners() const = 0;
  virtual double delta() const = 0;
  virtual const std::vector<Block>& blocks() const = 0;
  // Highest chain score among honest blocks (or genesis) mined so far;
  // the adversary sees blocks the moment they are mined.
  virtual double best_honest_score() const = 0;
  virtual std::int64_t best_honest_block() const = 0;
  // Highest-score block overall mined so far (ties to lowest id).
  virtual std::int64_t best_block() const = 0;
  // Chain-weight contribution of one block of the given type.
  virtual double type_score(int type_id) const = 0;
};

// Reveal of a previously withheld adversary block: broadcast at `at_time`
// (>= now) and delivered to miner m at at_time + miner_delays[m].
struct Reveal {
  std::int64_t block_id = 0;
  double at_time = 0.0;
  std::vector<double> miner_delays;  // each in [0, delta]; empty = all zero
};

// Placement of an adversary block for the arrival being processed.  Withheld
// until revealed unless broadcast_delay is finite.
struct AdversaryPlacement {
  std::int64_t parent_id = kGenesisId;
  double broadcast_delay = kNever;
  std::vector<double> miner_delays;  // each in [0, delta]; empty = all zero
};

struct StrategyActions {
  // Required for honest arrivals: one delay in [0, delta] per miner.
  std::vector<double> honest_delays;
  // Optional for adversary arrivals; absent means the arrival is discarded
  // (the adversary declines to mine).
  std::optional<AdversaryPlacement> placement;
  // Reveals may accompany any event.
  std::vector<Reveal> reveals;
};

class AttackStrategy {
 public:
  virtual ~AttackStrategy() = default;
  virtual std::string_view name() const = 0;
  virtual void on_honest_arrival(const RunView& view, const Arrival& a,
                                 StrategyActions& actions) = 0;
  virtual void on_adversary_arrival(const RunView& view, const Arrival& a,
                                    StrategyActions& actions) = 0;
};

// none: zero honest delays, never mines.
std::unique_ptr<AttackStrategy> make_none_strategy();
// full-delay: delays every honest block by delta for everyone, never mines.
std::unique_ptr<AttackStrategy> make_full_delay_strategy();
// private-mining: delays honest blocks fully, mines a private chain from
// genesis, reveals it (delay 0 to everyone) whenever its score exceeds the
// best honest chain score.  With restart_at_reveal the next private block
// mines on the overall best block instead of the private tip.
std::unique_ptr<AttackStrategy> make_private_mining_strategy(bool restart_at_reveal = false);
std::unique_ptr<AttackStrategy> make_strategy(std::string_view name);

struct AttackOutcome {
  // First event time at which, in some honest miner's view, a visible
  // adversary-tipped chain has strictly higher score than the best visible
  // honest block and does not contain that block.
  std::optional<double> dominated_at;
  // Distinct absolute instants at which withheld blocks were first broadcast.
  std::vector<double> reveal_times;
  // Honest blocks on the canonical chain at the horizon (the fork-choice
  // winner among blocks visible to every miner).
  std::int64_t final_honest_blocks_in_chain = 0;
  // True iff some honest block mined in [0, horizon/2] is on that chain.
  bool first_half_survivor = false;
};

// Runs a strategy against the two traces.  The honest trace drives honest
// block creation; each adversary arrival lets the strategy place a block.
// Strategy outputs are validated (delay bounds, parent already mined,
// reveals not in the past); violations throw InvalidSchedule.
std::pair<BlockTree, AttackOutcome> run_with_strategy(AttackStrategy& strategy,
                                                      const ArrivalTrace& honest,
                                                      const ArrivalTrace& adversary,
                                                      const std::vector<BlockTypeSpec>& specs,
                                                      double delta, int n_miners);

// Direct implementation of the private-mining attack under full honest
// delays.  Independent of the strategy runner; used as its cross-check.
AttackOutcome run_private_mining(const ArrivalTrace& honest, const ArrivalTrace& adversary,
                                 const std::vector<BlockTypeSpec>& specs, double delta,
                                 int n_miners);

}  // namespace forksim
