#include "forksim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "forksim/errors.hpp"

namespace forksim {

namespace {

std::vector<double> resolve_delays(const std::vector<double>& given, int n_miners, double delta) {
  if (given.empty()) return std::vector<double>(n_miners, 0.0);
  if (given.size() != static_cast<std::size_t>(n_miners))
    throw InvalidSchedule("delay row does not cover every miner");
  for (double d : given)
    if (!(std::isfinite(d) && d >= 0.0 && d <= delta))
      throw InvalidSchedule("delay outside [0, delta]");
  return given;
}

class NoneStrategy : public AttackStrategy {
 public:
  std::string_view name() const override { return "none"; }
  void on_honest_arrival(const RunView& view, const Arrival&, StrategyActions& a) override {
    a.honest_delays.assign(view.n_miners(), 0.0);
  }
  void on_adversary_arrival(const RunView&, const Arrival&, StrategyActions&) override {}
};

class FullDelayStrategy : public AttackStrategy {
 public:
  std::string_view name() const override { return "full-delay"; }
  void on_honest_arrival(const RunView& view, const Arrival&, StrategyActions& a) override {
    a.honest_delays.assign(view.n_miners(), view.delta());
  }
  void on_adversary_arrival(const RunView&, const Arrival&, StrategyActions&) override {}
};

class PrivateMiningStrategy : public AttackStrategy {
 public:
  explicit PrivateMiningStrategy(bool restart) : restart_(restart) {}
  std::string_view name() const override {
    return restart_ ? "private-mining-restart" : "private-mining";
  }
  void on_honest_arrival(const RunView& view, const Arrival&, StrategyActions& a) override {
    sync(view);
    a.honest_delays.assign(view.n_miners(), view.delta());
  }
  void on_adversary_arrival(const RunView& view, const Arrival& arr,
                            StrategyActions& a) override {
    sync(view);
    std::int64_t parent = mine_.empty() ? kGenesisId : mine_.back();
    if (restart_ && restart_pending_) {
      parent = view.best_block();
      restart_pending_ = false;
    }
    // Blocks are stored in id order, so ids index the block vector.
    const double tip_score = view.blocks()[static_cast<std::size_t>(parent)].chain_score;
    AdversaryPlacement placement;
    placement.parent_id = parent;
    if (tip_score + view.type_score(arr.type_id) > view.best_honest_score()) {
      // Broadcast the new tip now and reveal every withheld ancestor with it.
      placement.broadcast_delay = 0.0;
      for (std::size_t i = broadcast_; i < mine_.size(); ++i)
        a.reveals.push_back({mine_[i], view.now(), {}});
      broadcast_ = mine_.size() + 1;
      if (restart_) restart_pending_ = true;
    }
    a.placement = placement;
  }

 private:
  // Tracks our own placements by scanning only the new suffix of the block
  // vector; every adversary block in a run comes from this strategy.
  void sync(const RunView& view) {
    const auto& blocks = view.blocks();
    for (std::size_t i = seen_; i < blocks.size(); ++i)
      if (blocks[i].origin == Origin::Adversary) mine_.push_back(blocks[i].id);
    seen_ = blocks.size();
  }
  bool restart_;
  bool restart_pending_ = false;
  std::size_t seen_ = 1;  // genesis needs no scan
  std::vector<std::int64_t> mine_;
  std::size_t broadcast_ = 0;  // prefix of mine_ already broadcast
};

// Fork-choice preference: higher score, ties to the lowest id.
bool prefers(double score, std::int64_t id, double best_score, std::int64_t best_id) {
  return score > best_score || (score == best_score && id < best_id);
}

struct LiveView final : RunView {
  double now_ = 0.0;
  int n_miners_ = 0;
  double delta_ = 0.0;
  const std::vector<BlockTypeSpec>* specs = nullptr;
  std::vector<Block> blocks_;
  double best_h_score = 0.0;
  std::int64_t best_h_id = kGenesisId;
  double best_score = 0.0;
  std::int64_t best_id = kGenesisId;

  double now() const override { return now_; }
  int n_miners() const override { return n_miners_; }
  double delta() const override { return delta_; }
  const std::vector<Block>& blocks() const override { return blocks_; }
  double best_honest_score() const override { return best_h_score; }
  std::int64_t best_honest_block() const override { return best_h_id; }
  std::int64_t best_block() const override { return best_id; }
  double type_score(int type_id) const override { return score_of(*specs, type_id); }
};

// Earliest delivery-event time at which some miner's view holds an
// adversary-tipped chain strictly ahead of its best visible honest block
// without containing that block.
std::optional<double> find_domination_time(const BlockTree& tree) {
  struct Ev {
    double time;
    std::int64_t id;
    int miner;
  };
  std::vector<Ev> events;
  const int n_miners = tree.n_miners();
  for (const Block& b : tree.blocks()) {
    if (b.id == kGenesisId) continue;
    for (int m = 0; m < n_miners; ++m) {
      const double at = tree.visible_at(b.id, m);
      if (at != kNever) events.push_back({at, b.id, m});
    }
  }
  std::sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.id != b.id) return a.id < b.id;
    return a.miner < b.miner;
  });

  struct MinerState {
    double h_score = 0.0;
    std::int64_t h_id = kGenesisId;
    double a_score = 0.0;
    std::int64_t a_id = kNoParent;  // none yet
    std::vector<std::int64_t> adversary_visible;
  };
  std::vector<MinerState> st(n_miners);
  std::vector<int> touched;
  std::size_t i = 0;
  while (i < events.size()) {
    std::size_t j = i;
    touched.clear();
    // A view at time t includes everything delivered at or before t, so all
    // deliveries sharing a timestamp land before any check.
    while (j < events.size() && events[j].time == events[i].time) {
      const Ev& e = events[j];
      MinerState& s = st[e.miner];
      const Block& b = tree.block(e.id);
      if (b.origin == Origin::Honest) {
        if (prefers(b.chain_score, b.id, s.h_score, s.h_id)) {
          s.h_score = b.chain_score;
          s.h_id = b.id;
        }
      } else {
        s.adversary_visible.push_back(b.id);
        if (s.a_id == kNoParent || prefers(b.chain_score, b.id, s.a_score, s.a_id)) {
          s.a_score = b.chain_score;
          s.a_id = b.id;
        }
      }
      touched.push_back(e.miner);
      ++j;
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (int m : touched) {
      const MinerState& s = st[m];
      // Every chain contains genesis, so a view with no honest block yet
      // cannot be dominated.
      if (s.a_id == kNoParent || s.h_id == kGenesisId) continue;
      if (s.a_score <= s.h_score) continue;
      if (!tree.is_ancestor(s.h_id, s.a_id)) return events[i].time;
      for (std::int64_t id : s.adversary_visible) {
        const Block& b = tree.block(id);
        if (b.chain_score > s.h_score && !tree.is_ancestor(s.h_id, id))
          return events[i].time;
      }
    }
    i = j;
  }
  return std::nullopt;
}

// Fork-choice winner among blocks visible to every miner at the horizon,
// plus the honest-block census of its chain.
void finish_outcome(const BlockTree& tree, AttackOutcome& out) {
  double best_score = 0.0;
  std::int64_t best = kGenesisId;
  for (const Block& b : tree.blocks()) {
    if (b.id != kGenesisId && tree.visible_to_all_at(b.id) > tree.horizon()) continue;
    if (prefers(b.chain_score, b.id, best_score, best)) {
      best_score = b.chain_score;
      best = b.id;
    }
  }
  out.final_honest_blocks_in_chain = 0;
  out.first_half_survivor = false;
  for (std::int64_t id = best; id != kNoParent; id = tree.block(id).parent) {
    const Block& b = tree.block(id);
    if (id == kGenesisId || b.origin != Origin::Honest) continue;
    ++out.final_honest_blocks_in_chain;
    if (b.mine_time <= tree.horizon() / 2) out.first_half_survivor = true;
  }
}

}  // namespace

std::unique_ptr<AttackStrategy> make_none_strategy() { return std::make_unique<NoneStrategy>(); }

std::unique_ptr<AttackStrategy> make_full_delay_strategy() {
  return std::make_unique<FullDelayStrategy>();
}

std::unique_ptr<AttackStrategy> make_private_mining_strategy(bool restart_at_reveal) {
  return std::make_unique<PrivateMiningStrategy>(restart_at_reveal);
}

std::unique_ptr<AttackStrategy> make_strategy(std::string_view name) {
  if (name == "none") return make_none_strategy();
  if (name == "full-delay") return make_full_delay_strategy();
  if (name == "private-mining") return make_private_mining_strategy(false);
  if (name == "private-mining-restart") return make_private_mining_strategy(true);
  throw InvalidParameter("unknown strategy: " + std::string(name));
}

std::pair<BlockTree, AttackOutcome> run_with_strategy(AttackStrategy& strategy,
                                                      const ArrivalTrace& honest,
                                                      const ArrivalTrace& adversary,
                                                      const std::vector<BlockTypeSpec>& specs,
                                                      double delta, int n_miners) {
  validate_specs(specs);
  if (n_miners < 1) throw InvalidParameter("n_miners must be at least 1");
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");

  LiveView view;
  view.n_miners_ = n_miners;
  view.delta_ = delta;
  view.specs = &specs;
  view.blocks_.push_back(Block{});

  // Per-miner delivery heaps and fork-choice state, mirroring the replay the
  // final tree build performs.
  struct Delivery {
    double time;
    std::int64_t id;
  };
  auto later = [](const Delivery& a, const Delivery& b) {
    if (a.time != b.time) return a.time > b.time;
    return a.id > b.id;
  };
  struct MinerView {
    std::vector<Delivery> pending;
    double best_score = 0.0;
    std::int64_t best_id = kGenesisId;
  };
  std::vector<MinerView> views(n_miners);
  auto deliver = [&](int m, double now) {
    MinerView& v = views[m];
    while (!v.pending.empty() && v.pending.front().time <= now) {
      std::pop_heap(v.pending.begin(), v.pending.end(), later);
      const Delivery d = v.pending.back();
      v.pending.pop_back();
      const Block& b = view.blocks_[static_cast<std::size_t>(d.id)];
      if (prefers(b.chain_score, d.id, v.best_score, v.best_id)) {
        v.best_score = b.chain_score;
        v.best_id = d.id;
      }
    }
  };
  auto push_delivery = [&](int m, double time, std::int64_t id) {
    views[m].pending.push_back({time, id});
    std::push_heap(views[m].pending.begin(), views[m].pending.end(), later);
  };

  std::vector<std::vector<double>> honest_rows;
  std::vector<AdversaryBlockRequest> requests;
  std::vector<DelaySchedule::AdversaryRelease> releases;
  std::unordered_map<std::int64_t, std::size_t> request_of_block;
  std::vector<double> broadcast_instants;
  honest_rows.reserve(honest.arrivals.size());

  auto add_block = [&](std::int64_t parent, int type_id, Origin origin, int miner,
                       double time) {
    Block b;
    b.id = static_cast<std::int64_t>(view.blocks_.size());
    b.parent = parent;
    b.type_id = type_id;
    b.origin = origin;
    b.miner_id = miner;
    b.mine_time = time;
    b.chain_score =
        view.blocks_[static_cast<std::size_t>(parent)].chain_score + score_of(specs, type_id);
    view.blocks_.push_back(b);
    if (origin == Origin::Honest && prefers(b.chain_score, b.id, view.best_h_score, view.best_h_id)) {
      view.best_h_score = b.chain_score;
      view.best_h_id = b.id;
    }
    if (prefers(b.chain_score, b.id, view.best_score, view.best_id)) {
      view.best_score = b.chain_score;
      view.best_id = b.id;
    }
    return b.id;
  };

  auto apply_reveals = [&](const std::vector<Reveal>& reveals, double now) {
    for (const Reveal& r : reveals) {
      auto it = request_of_block.find(r.block_id);
      if (it == request_of_block.end())
        throw InvalidSchedule("reveal of a block the adversary does not hold");
      DelaySchedule::AdversaryRelease& rel = releases[it->second];
      if (rel.broadcast_time != kNever) throw InvalidSchedule("reveal of a broadcast block");
      if (!(std::isfinite(r.at_time) && r.at_time >= now))
        throw InvalidSchedule("reveal scheduled in the past");
      rel.broadcast_time = r.at_time;
      rel.miner_delays = resolve_delays(r.miner_delays, n_miners, delta);
      for (int m = 0; m < n_miners; ++m)
        push_delivery(m, rel.broadcast_time + rel.miner_delays[m], r.block_id);
      broadcast_instants.push_back(rel.broadcast_time);
    }
  };

  const double horizon = std::max(honest.horizon, adversary.horizon);
  std::size_t hi = 0, ai = 0;
  double last_time = 0.0;
  StrategyActions actions;
  while (hi < honest.arrivals.size() || ai < adversary.arrivals.size()) {
    const bool take_honest = ai >= adversary.arrivals.size() ||
                             (hi < honest.arrivals.size() &&
                              honest.arrivals[hi].time <= adversary.arrivals[ai].time);
    const Arrival& a = take_honest ? honest.arrivals[hi] : adversary.arrivals[ai];
    if (!(a.time >= last_time)) throw InvalidInput("arrivals out of order");
    last_time = a.time;
    view.now_ = a.time;
    actions = StrategyActions{};
    if (take_honest) {
      if (a.origin != Origin::Honest) throw InvalidInput("honest trace has an adversary arrival");
      if (a.miner_id < 0 || a.miner_id >= n_miners)
        throw InvalidInput("honest arrival has an out-of-range miner id");
      deliver(a.miner_id, a.time);
      const std::int64_t id = add_block(views[a.miner_id].best_id, a.type_id, Origin::Honest,
                                        a.miner_id, a.time);
      strategy.on_honest_arrival(view, a, actions);
      if (actions.placement) throw InvalidSchedule("placement outside an adversary arrival");
      if (actions.honest_delays.size() != static_cast<std::size_t>(n_miners))
        throw InvalidSchedule("honest delay row does not cover every miner");
      for (double d : actions.honest_delays)
        if (!(std::isfinite(d) && d >= 0.0 && d <= delta))
          throw InvalidSchedule("delay outside [0, delta]");
      honest_rows.push_back(actions.honest_delays);
      for (int m = 0; m < n_miners; ++m)
        push_delivery(m, m == a.miner_id ? a.time : a.time + actions.honest_delays[m], id);
      ++hi;
    } else {
      if (a.origin != Origin::Adversary) throw InvalidInput("adversary trace has an honest arrival");
      strategy.on_adversary_arrival(view, a, actions);
      if (!actions.honest_delays.empty())
        throw InvalidSchedule("honest delays outside an honest arrival");
      if (actions.placement) {
        const AdversaryPlacement& p = *actions.placement;
        if (p.parent_id < 0 || static_cast<std::size_t>(p.parent_id) >= view.blocks_.size())
          throw InvalidSchedule("adversary block parent not yet mined");
        const std::int64_t id = add_block(p.parent_id, a.type_id, Origin::Adversary,
                                          kAdversaryMiner, a.time);
        requests.push_back({a.time, a.type_id, p.parent_id});
        DelaySchedule::AdversaryRelease rel;
        if (p.broadcast_delay != kNever) {
          if (!(std::isfinite(p.broadcast_delay) && p.broadcast_delay >= 0.0))
            throw InvalidSchedule("broadcast delay must be nonnegative");
          rel.broadcast_time = a.time + p.broadcast_delay;
          rel.miner_delays = resolve_delays(p.miner_delays, n_miners, delta);
          for (int m = 0; m < n_miners; ++m)
            push_delivery(m, rel.broadcast_time + rel.miner_delays[m], id);
          broadcast_instants.push_back(rel.broadcast_time);
        }
        releases.push_back(std::move(rel));
        request_of_block.emplace(id, requests.size() - 1);
      }
      ++ai;
    }
    apply_reveals(actions.reveals, a.time);
  }

  ArrivalTrace honest_run = honest;
  honest_run.horizon = horizon;
  DelaySchedule schedule{std::move(honest_rows), std::move(releases)};
  BlockTree tree = build_tree(honest_run, requests, schedule, specs, delta, n_miners);

  // The incremental view replayed the same schedule; any disagreement with
  // the final tree is an internal bug, not bad input.
  if (tree.size() != view.blocks_.size()) throw std::logic_error("replay mismatch: block count");
  for (std::size_t i = 0; i < view.blocks_.size(); ++i) {
    const Block& lhs = view.blocks_[i];
    const Block& rhs = tree.block(static_cast<std::int64_t>(i));
    if (lhs.parent != rhs.parent || lhs.chain_score != rhs.chain_score ||
        lhs.mine_time != rhs.mine_time)
      throw std::logic_error("replay mismatch: block state");
  }

  AttackOutcome outcome;
  std::sort(broadcast_instants.begin(), broadcast_instants.end());
  broadcast_instants.erase(std::unique(broadcast_instants.begin(), broadcast_instants.end()),
                           broadcast_instants.end());
  outcome.reveal_times = std::move(broadcast_instants);
  outcome.dominated_at = find_domination_time(tree);
  finish_outcome(tree, outcome);
  return {std::move(tree), std::move(outcome)};
}

AttackOutcome run_private_mining(const ArrivalTrace& honest, const ArrivalTrace& adversary,
                                 const std::vector<BlockTypeSpec>& specs, double delta,
                                 int n_miners) {
  validate_specs(specs);
  if (n_miners < 1) throw InvalidParameter("n_miners must be at least 1");
  if (!(std::isfinite(delta) && delta >= 0.0))
    throw InvalidParameter("delta must be nonnegative and finite");
  const double horizon = std::max(honest.horizon, adversary.horizon);

  // Flat block store; genesis is entry 0.
  std::vector<std::int64_t> parent{kNoParent};
  std::vector<double> score{0.0};
  std::vector<double> mine_time{0.0};
  std::vector<char> is_honest{1};
  std::vector<int> miner_of{kAdversaryMiner};

  struct Best {
    double score = 0.0;
    std::int64_t id = kGenesisId;
  };
  auto better = [](double s, std::int64_t id, const Best& b) {
    return s > b.score || (s == b.score && id < b.id);
  };
  std::vector<Best> honest_seen(n_miners);  // best visible honest block, per miner
  std::vector<Best> adv_seen(n_miners);     // best visible adversary block, per miner
  std::vector<char> adv_any(n_miners, 0);
  double mined_best = 0.0;  // best honest chain score mined anywhere

  std::int64_t private_tip = kGenesisId;
  double private_score = 0.0;
  AttackOutcome out;
  std::optional<double> dominated;

  auto check = [&](int m, double t) {
    if (dominated) return;
    // Private chains hold no honest block, so containment only shields a
    // view whose best honest block is still genesis.
    if (adv_any[m] && honest_seen[m].id != kGenesisId &&
        adv_seen[m].score > honest_seen[m].score)
      dominated = t;
  };

  // Honest blocks in mine order double as the delayed-delivery queue: under
  // full delay everyone else receives block j at mine_time[j] + delta.
  std::vector<std::int64_t> honest_blocks;
  std::size_t di = 0, hi = 0, ai = 0;
  for (;;) {
    const double dv = di < honest_blocks.size() ? mine_time[honest_blocks[di]] + delta : kNever;
    const double hv = hi < honest.arrivals.size() ? honest.arrivals[hi].time : kNever;
    const double av = ai < adversary.arrivals.size() ? adversary.arrivals[ai].time : kNever;
    if (dv == kNever && hv == kNever && av == kNever) break;
    if (dv <= hv && dv <= av) {
      // Delivery of honest block to everyone but its own miner.
      const std::int64_t id = honest_blocks[di];
      for (int m = 0; m < n_miners; ++m) {
        if (m == miner_of[id]) continue;
        if (better(score[id], id, honest_seen[m])) honest_seen[m] = {score[id], id};
        check(m, dv);
      }
      ++di;
    } else if (hv <= av) {
      const Arrival& a = honest.arrivals[hi];
      if (a.origin != Origin::Honest) throw InvalidInput("honest trace has an adversary arrival");
      if (a.miner_id < 0 || a.miner_id >= n_miners)
        throw InvalidInput("honest arrival has an out-of-range miner id");
      const int m = a.miner_id;
      Best view = honest_seen[m];
      if (adv_any[m] && better(adv_seen[m].score, adv_seen[m].id, view))
        view = adv_seen[m];
      const std::int64_t id = static_cast<std::int64_t>(parent.size());
      parent.push_back(view.id);
      score.push_back(score[view.id] + score_of(specs, a.type_id));
      mine_time.push_back(a.time);
      is_honest.push_back(1);
      miner_of.push_back(m);
      honest_blocks.push_back(id);
      honest_seen[m] = {score[id], id};
      if (score[id] > mined_best) mined_best = score[id];
      check(m, a.time);
      ++hi;
    } else {
      const Arrival& a = adversary.arrivals[ai];
      if (a.origin != Origin::Adversary)
        throw InvalidInput("adversary trace has an honest arrival");
      const std::int64_t id = static_cast<std::int64_t>(parent.size());
      parent.push_back(private_tip);
      score.push_back(private_score + score_of(specs, a.type_id));
      mine_time.push_back(a.time);
      is_honest.push_back(0);
      miner_of.push_back(kAdversaryMiner);
      private_tip = id;
      private_score = score[id];
      if (private_score > mined_best) {
        // Reveal the whole private chain, delay zero to everyone.
        out.reveal_times.push_back(a.time);
        for (int m = 0; m < n_miners; ++m) {
          if (!adv_any[m] || better(private_score, id, adv_seen[m]))
            adv_seen[m] = {private_score, id};
          adv_any[m] = 1;
          check(m, a.time);
        }
      }
      ++ai;
    }
  }

  // Fork-choice winner among blocks every miner can see at the horizon.
  std::vector<char> revealed(parent.size(), 0);
  {
    std::size_t ri = 0;
    // Reveals are chain prefixes: everything mined before a reveal instant
    // with adversary origin is broadcast by it.
    for (std::size_t id = 1; id < parent.size(); ++id) {
      if (is_honest[id]) continue;
      while (ri < out.reveal_times.size() && out.reveal_times[ri] < mine_time[id]) ++ri;
      revealed[id] = ri < out.reveal_times.size() && out.reveal_times[ri] <= horizon;
    }
  }
  Best final;
  for (std::size_t id = 1; id < parent.size(); ++id) {
    // With one miner there is nobody to deliver to, so an honest block is
    // seen by everyone the moment it is mined.
    const double all_honest_at = n_miners == 1 ? mine_time[id] : mine_time[id] + delta;
    const bool seen_by_all = is_honest[id] ? all_honest_at <= horizon : revealed[id] != 0;
    if (seen_by_all && better(score[id], static_cast<std::int64_t>(id), final))
      final = {score[id], static_cast<std::int64_t>(id)};
  }
  out.final_honest_blocks_in_chain = 0;
  out.first_half_survivor = false;
  for (std::int64_t id = final.id; id != kNoParent; id = parent[id]) {
    if (id == kGenesisId || !is_honest[id]) continue;
    ++out.final_honest_blocks_in_chain;
    if (mine_time[id] <= horizon / 2) out.first_half_survivor = true;
  }
  out.dominated_at = dominated;
  return out;
}

}  // namespace forksim
