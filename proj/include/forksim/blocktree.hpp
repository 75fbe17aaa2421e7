// The mother tree: every block mined in a run, with per-miner visibility
// times determined by a delay schedule, and fork-choice queries over it.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "forksim/types.hpp"

namespace forksim {

constexpr double kNever = std::numeric_limits<double>::infinity();
constexpr std::int64_t kGenesisId = 0;
constexpr std::int64_t kNoParent = -1;

struct Block {
  std::int64_t id = 0;
  std::int64_t parent = kNoParent;
  int type_id = -1;  // -1 for genesis
  Origin origin = Origin::Honest;
  int miner_id = kAdversaryMiner;
  double mine_time = 0.0;
  double chain_score = 0.0;  // cumulative score from genesis, inclusive
};

// An adversary block decided by a strategy: mined at mine_time on parent_id,
// which must be a block already mined at that moment (the adversary sees
// every block the instant it is mined).
struct AdversaryBlockRequest {
  double mine_time = 0.0;
  int type_id = 0;
  std::int64_t parent_id = kGenesisId;
};

// Per-block delivery delays.  honest_delays is indexed by honest arrival
// index and holds one delay in [0, delta] per miner (the block's own miner
// sees it at mine time regardless).  adversary_release is indexed by
// adversary request index: the block is first broadcast at the absolute time
// broadcast_time (>= mine time; kNever = withheld forever), after which
// miner m receives it miner_delays[m] seconds later (each in [0, delta]).
struct DelaySchedule {
  struct AdversaryRelease {
    double broadcast_time = kNever;
    std::vector<double> miner_delays;
  };
  std::vector<std::vector<double>> honest_delays;
  std::vector<AdversaryRelease> adversary_release;
};

class BlockTree {
 public:
  BlockTree(int n_miners, double delta);

  int n_miners() const { return n_miners_; }
  double delta() const { return delta_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return blocks_.size(); }
  const Block& block(std::int64_t id) const;
  const std::vector<Block>& blocks() const { return blocks_; }

  // First time miner m can use the block; kNever if it never reaches m.
  double visible_at(std::int64_t id, int miner) const;
  // First time the block is visible to every honest miner.
  double visible_to_all_at(std::int64_t id) const;

  // True iff `anc` lies on the path from genesis to `id` (inclusive).
  bool is_ancestor(std::int64_t anc, std::int64_t id) const;

  // Block id of the k-th honest arrival / k-th adversary request.
  std::int64_t honest_block_id(std::size_t arrival_index) const;
  std::int64_t adversary_block_id(std::size_t request_index) const;
  const std::vector<std::int64_t>& honest_block_ids() const { return honest_ids_; }

  // Fork-choice winner among blocks visible to `miner` at time t (all blocks,
  // any origin): highest chain score, ties to the lowest id.  Genesis is
  // always visible, so this is always defined.
  std::int64_t tip(double t, int miner) const;

  // Highest chain score among honest blocks (or genesis) visible to `miner`
  // at t, or visible to every miner when miner is nullopt.
  double canonical_score(double t, std::optional<int> miner = std::nullopt) const;

  // Highest chain score among honest blocks (or genesis) mined at or before
  // t, ignoring visibility.
  double best_honest_score_mined_by(double t) const;

  // Used by builders; not part of the query API.
  struct Internal;

 private:
  friend struct Internal;
  int n_miners_;
  double delta_;
  double horizon_ = 0.0;
  std::vector<Block> blocks_;
  std::vector<std::vector<double>> visible_;  // [block][miner]
  std::vector<std::int64_t> honest_ids_;
  std::vector<std::int64_t> adversary_ids_;

  // Sorted event indexes built after construction for O(log n) queries.
  struct Cursor {
    std::vector<double> times;
    std::vector<double> best_score;
    std::vector<std::int64_t> best_id;
  };
  Cursor all_visible_honest_;                // canonical_score(t, all)
  std::vector<Cursor> per_miner_honest_;     // canonical_score(t, m)
  std::vector<Cursor> per_miner_tip_;        // tip(t, m)
  Cursor mined_honest_;                      // best_honest_score_mined_by
  void build_cursors();
};

// Deterministically replays a fixed schedule: honest arrivals become blocks
// whose parent is the fork-choice winner in their miner's view at mine time;
// adversary requests attach to their chosen parents.  Throws
// ScheduleIncomplete / InvalidSchedule / InvalidInput on malformed input.
BlockTree build_tree(const ArrivalTrace& honest,
                     const std::vector<AdversaryBlockRequest>& adversary_blocks,
                     const DelaySchedule& schedule, const std::vector<BlockTypeSpec>& specs,
                     double delta, int n_miners);

// Tree dump format: one block per line,
//   id<TAB>parent<TAB>type_id<TAB>origin<TAB>miner_id<TAB>mine_time<TAB>chain_score
// in id order, times with 9 fractional digits, origin as G/H/A.
std::string dump_tree(const BlockTree& tree);

}  // namespace forksim
