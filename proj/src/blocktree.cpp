#include "forksim/blocktree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "forksim/errors.hpp"

namespace forksim {

namespace {

void check_delay(double d, double delta, const char* what) {
  if (!(std::isfinite(d) && d >= 0.0 && d <= delta))
    throw InvalidSchedule(std::string(what) + " delay outside [0, delta]");
}

}  // namespace

BlockTree::BlockTree(int n_miners, double delta) : n_miners_(n_miners), delta_(delta) {
  if (n_miners < 1) throw InvalidParameter("n_miners must be at least 1");
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");
  Block genesis;
  genesis.id = kGenesisId;
  blocks_.push_back(genesis);
  visible_.emplace_back(n_miners, 0.0);
}

const Block& BlockTree::block(std::int64_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= blocks_.size())
    throw InvalidQuery("unknown block id");
  return blocks_[static_cast<std::size_t>(id)];
}

double BlockTree::visible_at(std::int64_t id, int miner) const {
  if (miner < 0 || miner >= n_miners_) throw InvalidQuery("unknown miner id");
  block(id);
  return visible_[static_cast<std::size_t>(id)][miner];
}

double BlockTree::visible_to_all_at(std::int64_t id) const {
  block(id);
  const auto& row = visible_[static_cast<std::size_t>(id)];
  return *std::max_element(row.begin(), row.end());
}

bool BlockTree::is_ancestor(std::int64_t anc, std::int64_t id) const {
  block(anc);
  block(id);
  // Parents always have smaller ids, so walk down until we pass anc.
  while (id > anc) id = blocks_[static_cast<std::size_t>(id)].parent;
  return id == anc;
}

std::int64_t BlockTree::honest_block_id(std::size_t arrival_index) const {
  if (arrival_index >= honest_ids_.size()) throw InvalidQuery("honest arrival index out of range");
  return honest_ids_[arrival_index];
}

std::int64_t BlockTree::adversary_block_id(std::size_t request_index) const {
  if (request_index >= adversary_ids_.size())
    throw InvalidQuery("adversary request index out of range");
  return adversary_ids_[request_index];
}

void BlockTree::build_cursors() {
  // Each cursor is a time-sorted sequence of candidate events with running
  // fork-choice maxima, so queries are a single upper_bound.
  struct Event {
    double time;
    double score;
    std::int64_t id;
  };
  auto finish = [](std::vector<Event>& ev, Cursor& c) {
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) {
      if (a.time != b.time) return a.time < b.time;
      if (a.score != b.score) return a.score > b.score;
      return a.id < b.id;
    });
    c.times.clear();
    c.best_score.clear();
    c.best_id.clear();
    double score = 0.0;
    std::int64_t id = kGenesisId;
    for (const Event& e : ev) {
      // Fork choice: higher score wins, ties to the lowest id.
      if (e.score > score || (e.score == score && e.id < id)) {
        score = e.score;
        id = e.id;
      }
      if (!c.times.empty() && c.times.back() == e.time) {
        c.best_score.back() = score;
        c.best_id.back() = id;
      } else {
        c.times.push_back(e.time);
        c.best_score.push_back(score);
        c.best_id.push_back(id);
      }
    }
  };

  std::vector<Event> all_honest, mined;
  std::vector<std::vector<Event>> per_honest(n_miners_), per_tip(n_miners_);
  for (const Block& b : blocks_) {
    if (b.id == kGenesisId) continue;
    const auto& row = visible_[static_cast<std::size_t>(b.id)];
    for (int m = 0; m < n_miners_; ++m) {
      if (row[m] == kNever) continue;
      per_tip[m].push_back({row[m], b.chain_score, b.id});
      if (b.origin == Origin::Honest) per_honest[m].push_back({row[m], b.chain_score, b.id});
    }
    if (b.origin == Origin::Honest) {
      mined.push_back({b.mine_time, b.chain_score, b.id});
      const double everyone = *std::max_element(row.begin(), row.end());
      if (everyone != kNever) all_honest.push_back({everyone, b.chain_score, b.id});
    }
  }
  finish(all_honest, all_visible_honest_);
  finish(mined, mined_honest_);
  per_miner_honest_.resize(n_miners_);
  per_miner_tip_.resize(n_miners_);
  for (int m = 0; m < n_miners_; ++m) {
    finish(per_honest[m], per_miner_honest_[m]);
    finish(per_tip[m], per_miner_tip_[m]);
  }
}

namespace {

// Index of the last cursor entry with time <= t, or -1.
std::int64_t cursor_floor(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return static_cast<std::int64_t>(it - times.begin()) - 1;
}

}  // namespace

std::int64_t BlockTree::tip(double t, int miner) const {
  if (miner < 0 || miner >= n_miners_) throw InvalidQuery("unknown miner id");
  const Cursor& c = per_miner_tip_[miner];
  const std::int64_t i = cursor_floor(c.times, t);
  return i < 0 ? kGenesisId : c.best_id[static_cast<std::size_t>(i)];
}

double BlockTree::canonical_score(double t, std::optional<int> miner) const {
  const Cursor* c = &all_visible_honest_;
  if (miner) {
    if (*miner < 0 || *miner >= n_miners_) throw InvalidQuery("unknown miner id");
    c = &per_miner_honest_[*miner];
  }
  const std::int64_t i = cursor_floor(c->times, t);
  return i < 0 ? 0.0 : c->best_score[static_cast<std::size_t>(i)];
}

double BlockTree::best_honest_score_mined_by(double t) const {
  const std::int64_t i = cursor_floor(mined_honest_.times, t);
  return i < 0 ? 0.0 : mined_honest_.best_score[static_cast<std::size_t>(i)];
}

struct BlockTree::Internal {
  static std::int64_t add_block(BlockTree& tree, std::int64_t parent, int type_id, Origin origin,
                                int miner_id, double mine_time, double score,
                                std::vector<double> visible) {
    Block b;
    b.id = static_cast<std::int64_t>(tree.blocks_.size());
    b.parent = parent;
    b.type_id = type_id;
    b.origin = origin;
    b.miner_id = miner_id;
    b.mine_time = mine_time;
    b.chain_score = tree.blocks_[static_cast<std::size_t>(parent)].chain_score + score;
    tree.blocks_.push_back(b);
    tree.visible_.push_back(std::move(visible));
    return b.id;
  }
  static void set_visible(BlockTree& tree, std::int64_t id, int miner, double at) {
    tree.visible_[static_cast<std::size_t>(id)][miner] = at;
  }
  static void finalize(BlockTree& tree, double horizon,
                       std::vector<std::int64_t> honest_ids,
                       std::vector<std::int64_t> adversary_ids) {
    tree.horizon_ = horizon;
    tree.honest_ids_ = std::move(honest_ids);
    tree.adversary_ids_ = std::move(adversary_ids);
    tree.build_cursors();
  }
};

BlockTree build_tree(const ArrivalTrace& honest,
                     const std::vector<AdversaryBlockRequest>& adversary_blocks,
                     const DelaySchedule& schedule, const std::vector<BlockTypeSpec>& specs,
                     double delta, int n_miners) {
  validate_specs(specs);
  BlockTree tree(n_miners, delta);

  if (schedule.honest_delays.size() != honest.arrivals.size())
    throw ScheduleIncomplete("schedule covers a different number of honest arrivals");
  if (schedule.adversary_release.size() != adversary_blocks.size())
    throw ScheduleIncomplete("schedule covers a different number of adversary blocks");

  // Per-miner view state, advanced in event-time order: pending deliveries
  // sorted by delivery time, plus the current fork-choice winner.
  struct Delivery {
    double time;
    std::int64_t id;
  };
  struct View {
    std::vector<Delivery> pending;  // heap keyed by earliest time
    double best_score = 0.0;
    std::int64_t best_id = kGenesisId;
  };
  auto later = [](const Delivery& a, const Delivery& b) {
    if (a.time != b.time) return a.time > b.time;
    return a.id > b.id;
  };
  std::vector<View> views(n_miners);
  auto deliver = [&](int m, double now) {
    View& v = views[m];
    while (!v.pending.empty() && v.pending.front().time <= now) {
      std::pop_heap(v.pending.begin(), v.pending.end(), later);
      const Delivery d = v.pending.back();
      v.pending.pop_back();
      const Block& b = tree.block(d.id);
      if (b.chain_score > v.best_score ||
          (b.chain_score == v.best_score && d.id < v.best_id)) {
        v.best_score = b.chain_score;
        v.best_id = d.id;
      }
    }
  };
  auto schedule_delivery = [&](int m, double time, std::int64_t id) {
    views[m].pending.push_back({time, id});
    std::push_heap(views[m].pending.begin(), views[m].pending.end(), later);
  };

  std::vector<std::int64_t> honest_ids, adversary_ids;
  honest_ids.reserve(honest.arrivals.size());
  adversary_ids.reserve(adversary_blocks.size());

  std::size_t hi = 0, ai = 0;
  double last_time = 0.0;
  const std::size_t nh = honest.arrivals.size(), na = adversary_blocks.size();
  while (hi < nh || ai < na) {
    // Honest arrivals processed first at equal times: the adversary sees a
    // block the instant it is mined, so it may build on it at the same time.
    const bool take_honest =
        ai >= na || (hi < nh && honest.arrivals[hi].time <= adversary_blocks[ai].mine_time);
    if (take_honest) {
      const Arrival& a = honest.arrivals[hi];
      if (a.origin != Origin::Honest) throw InvalidInput("honest trace has an adversary arrival");
      if (a.miner_id < 0 || a.miner_id >= n_miners)
        throw InvalidInput("honest arrival has an out-of-range miner id");
      if (!(a.time >= last_time)) throw InvalidInput("honest arrivals out of order");
      last_time = a.time;
      const auto& delays = schedule.honest_delays[hi];
      if (delays.size() != static_cast<std::size_t>(n_miners))
        throw ScheduleIncomplete("honest delay row does not cover every miner");
      deliver(a.miner_id, a.time);
      const std::int64_t parent = views[a.miner_id].best_id;
      const std::int64_t id = BlockTree::Internal::add_block(
          tree, parent, a.type_id, Origin::Honest, a.miner_id, a.time,
          score_of(specs, a.type_id), std::vector<double>(n_miners, kNever));
      for (int m = 0; m < n_miners; ++m) {
        check_delay(delays[m], delta, "honest");
        // A block's own miner has it from the moment of mining.
        const double at = (m == a.miner_id) ? a.time : a.time + delays[m];
        BlockTree::Internal::set_visible(tree, id, m, at);
        schedule_delivery(m, at, id);
      }
      honest_ids.push_back(id);
      ++hi;
    } else {
      const AdversaryBlockRequest& r = adversary_blocks[ai];
      if (!(r.mine_time >= last_time)) throw InvalidInput("adversary requests out of order");
      last_time = r.mine_time;
      if (r.parent_id < 0 || static_cast<std::size_t>(r.parent_id) >= tree.size())
        throw InvalidSchedule("adversary block parent not yet mined");
      const auto& rel = schedule.adversary_release[ai];
      const std::int64_t id = BlockTree::Internal::add_block(
          tree, r.parent_id, r.type_id, Origin::Adversary, kAdversaryMiner, r.mine_time,
          score_of(specs, r.type_id), std::vector<double>(n_miners, kNever));
      if (rel.broadcast_time != kNever) {
        if (!(rel.broadcast_time >= r.mine_time))
          throw InvalidSchedule("adversary broadcast precedes mining");
        if (rel.miner_delays.size() != static_cast<std::size_t>(n_miners))
          throw ScheduleIncomplete("adversary delay row does not cover every miner");
        for (int m = 0; m < n_miners; ++m) {
          check_delay(rel.miner_delays[m], delta, "adversary");
          const double at = rel.broadcast_time + rel.miner_delays[m];
          BlockTree::Internal::set_visible(tree, id, m, at);
          schedule_delivery(m, at, id);
        }
      }
      adversary_ids.push_back(id);
      ++ai;
    }
  }

  BlockTree::Internal::finalize(tree, honest.horizon, std::move(honest_ids),
                                std::move(adversary_ids));
  return tree;
}

std::string dump_tree(const BlockTree& tree) {
  std::string out;
  char line[192];
  for (const Block& b : tree.blocks()) {
    const char origin = b.id == kGenesisId ? 'G' : (b.origin == Origin::Honest ? 'H' : 'A');
    std::snprintf(line, sizeof line, "%lld\t%lld\t%d\t%c\t%d\t%.9f\t%.9f\n",
                  static_cast<long long>(b.id), static_cast<long long>(b.parent), b.type_id,
                  origin, b.miner_id, b.mine_time, b.chain_score);
    out += line;
  }
  return out;
}

}  // namespace forksim
