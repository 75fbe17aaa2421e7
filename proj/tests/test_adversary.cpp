#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "forksim/adversary.hpp"
#include "forksim/arrivals.hpp"
#include "forksim/blocktree.hpp"
#include "forksim/errors.hpp"
#include "forksim/rng.hpp"

using namespace forksim;

namespace {

const std::vector<BlockTypeSpec> kSpecs = {{0, 1.0, 1.0, 0.3}};

struct TracePair {
  ArrivalTrace honest;
  ArrivalTrace adversary;
};

TracePair random_pair(double horizon, int n_miners, std::uint64_t seed,
                      const std::vector<BlockTypeSpec>& specs = kSpecs) {
  return {generate_typed_trace(specs, Origin::Honest, n_miners, horizon, trial_seed(seed, 0)),
          generate_typed_trace(specs, Origin::Adversary, n_miners, horizon, trial_seed(seed, 1))};
}

// A strategy that emits whatever delays the test tells it to.
struct ScriptedStrategy final : AttackStrategy {
  double honest_delay = 0.0;
  std::optional<AdversaryPlacement> place;
  std::vector<Reveal> pending_reveals;

  std::string_view name() const override { return "scripted"; }
  void on_honest_arrival(const RunView& view, const Arrival&,
                         StrategyActions& actions) override {
    actions.honest_delays.assign(view.n_miners(), honest_delay);
    actions.reveals = pending_reveals;
    pending_reveals.clear();
  }
  void on_adversary_arrival(const RunView&, const Arrival&, StrategyActions& actions) override {
    actions.placement = place;
  }
};

}  // namespace

TEST_CASE("none strategy equals a zero-delay schedule replay") {
  const TracePair tp = random_pair(60.0, 3, 11);
  auto strategy = make_none_strategy();
  const auto [tree, outcome] =
      run_with_strategy(*strategy, tp.honest, tp.adversary, kSpecs, 0.7, 3);

  DelaySchedule s;
  s.honest_delays.assign(tp.honest.arrivals.size(), std::vector<double>(3, 0.0));
  const BlockTree ref = build_tree(tp.honest, {}, s, kSpecs, 0.7, 3);

  CHECK(dump_tree(tree) == dump_tree(ref));
  CHECK(!outcome.dominated_at.has_value());
  CHECK(outcome.reveal_times.empty());
  CHECK(outcome.first_half_survivor);
}

TEST_CASE("full-delay strategy equals a full-delay schedule replay") {
  const TracePair tp = random_pair(60.0, 3, 12);
  auto strategy = make_full_delay_strategy();
  const auto [tree, outcome] =
      run_with_strategy(*strategy, tp.honest, tp.adversary, kSpecs, 0.7, 3);

  DelaySchedule s;
  s.honest_delays.assign(tp.honest.arrivals.size(), std::vector<double>(3, 0.7));
  const BlockTree ref = build_tree(tp.honest, {}, s, kSpecs, 0.7, 3);

  CHECK(dump_tree(tree) == dump_tree(ref));
  CHECK(outcome.reveal_times.empty());
}

TEST_CASE("private mining: generic runner and bespoke scorer agree exactly") {
  int dominated_seen = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const double delta = (seed % 3 == 0) ? 0.0 : (seed % 3 == 1 ? 0.5 : 2.0);
    const int n_miners = (seed % 2 == 0) ? 1 : 3;
    const std::vector<BlockTypeSpec> specs = {{0, 1.0, 1.0, seed % 5 == 0 ? 1.2 : 0.4}};
    const TracePair tp = random_pair(80.0, n_miners, 1000 + seed, specs);

    auto strategy = make_private_mining_strategy(false);
    const auto [tree, a] =
        run_with_strategy(*strategy, tp.honest, tp.adversary, specs, delta, n_miners);
    const AttackOutcome b = run_private_mining(tp.honest, tp.adversary, specs, delta, n_miners);

    REQUIRE(a.dominated_at == b.dominated_at);
    REQUIRE(a.reveal_times == b.reveal_times);
    REQUIRE(a.final_honest_blocks_in_chain == b.final_honest_blocks_in_chain);
    REQUIRE(a.first_half_survivor == b.first_half_survivor);
    if (a.dominated_at.has_value()) ++dominated_seen;
  }
  CHECK(dominated_seen > 0);  // the comparison must exercise real reveals
}

TEST_CASE("private mining outcome invariants") {
  const TracePair tp = random_pair(100.0, 3, 77, {{0, 1.0, 1.0, 0.8}});
  auto strategy = make_private_mining_strategy(false);
  const auto [tree, outcome] =
      run_with_strategy(*strategy, tp.honest, tp.adversary, kSpecs, 0.5, 3);

  CHECK(std::is_sorted(outcome.reveal_times.begin(), outcome.reveal_times.end()));
  CHECK(std::adjacent_find(outcome.reveal_times.begin(), outcome.reveal_times.end()) ==
        outcome.reveal_times.end());
  if (outcome.dominated_at.has_value()) {
    REQUIRE(!outcome.reveal_times.empty());
    CHECK(outcome.reveal_times.front() <= *outcome.dominated_at);
  }
  // Reveals happen at adversary arrival instants.
  for (double r : outcome.reveal_times) {
    bool found = false;
    for (const auto& a : tp.adversary.arrivals) found = found || a.time == r;
    CHECK(found);
  }
}

TEST_CASE("strategies only see the past: truncating the future changes nothing") {
  const double cut = 50.0;
  const TracePair tp = random_pair(100.0, 2, 21, {{0, 1.0, 1.0, 0.5}});

  TracePair head = tp;
  auto chop = [&](ArrivalTrace& t) {
    t.arrivals.erase(std::remove_if(t.arrivals.begin(), t.arrivals.end(),
                                    [&](const Arrival& a) { return a.time > cut; }),
                     t.arrivals.end());
    t.horizon = cut;
  };
  chop(head.honest);
  chop(head.adversary);

  auto s1 = make_private_mining_strategy(false);
  auto s2 = make_private_mining_strategy(false);
  const auto [full_tree, full_out] =
      run_with_strategy(*s1, tp.honest, tp.adversary, kSpecs, 0.5, 2);
  const auto [head_tree, head_out] =
      run_with_strategy(*s2, head.honest, head.adversary, kSpecs, 0.5, 2);

  // Every block mined by the cut is identical in both runs.
  REQUIRE(head_tree.size() <= full_tree.size());
  for (std::size_t id = 0; id < head_tree.size(); ++id) {
    const Block& x = head_tree.block(std::int64_t(id));
    const Block& y = full_tree.block(std::int64_t(id));
    REQUIRE(x.mine_time == y.mine_time);
    REQUIRE(x.parent == y.parent);
    REQUIRE(x.chain_score == y.chain_score);
    REQUIRE(x.origin == y.origin);
  }
  for (std::size_t id = head_tree.size(); id < full_tree.size(); ++id)
    REQUIRE(full_tree.block(std::int64_t(id)).mine_time > cut);
}

TEST_CASE("runner validates strategy output") {
  ArrivalTrace honest;
  honest.horizon = 10.0;
  honest.arrivals.push_back({1.0, 0, Origin::Honest, 0});
  ArrivalTrace adv;
  adv.horizon = 10.0;
  adv.arrivals.push_back({2.0, 0, Origin::Adversary, kAdversaryMiner});

  SUBCASE("honest delay above delta") {
    ScriptedStrategy s;
    s.honest_delay = 2.0;
    CHECK_THROWS_AS(run_with_strategy(s, honest, adv, kSpecs, 1.0, 2), InvalidSchedule);
  }
  SUBCASE("placement parent must exist") {
    ScriptedStrategy s;
    s.place = AdversaryPlacement{99, kNever, {}};
    CHECK_THROWS_AS(run_with_strategy(s, honest, adv, kSpecs, 1.0, 2), InvalidSchedule);
  }
  SUBCASE("reveal of an unknown block") {
    ScriptedStrategy s;
    s.pending_reveals = {{55, 0.5, {}}};
    CHECK_THROWS_AS(run_with_strategy(s, honest, adv, kSpecs, 1.0, 2), InvalidSchedule);
  }
  SUBCASE("declining adversary arrivals is legal") {
    ScriptedStrategy s;
    const auto [tree, outcome] = run_with_strategy(s, honest, adv, kSpecs, 1.0, 2);
    CHECK(tree.size() == 2);  // genesis + one honest block
    CHECK(outcome.reveal_times.empty());
  }
}

TEST_CASE("reveal scheduling validates and applies") {
  ArrivalTrace honest;
  honest.horizon = 10.0;
  honest.arrivals.push_back({1.0, 0, Origin::Honest, 0});
  honest.arrivals.push_back({5.0, 0, Origin::Honest, 1});
  ArrivalTrace adv;
  adv.horizon = 10.0;
  adv.arrivals.push_back({2.0, 0, Origin::Adversary, kAdversaryMiner});

  // Place a withheld block at 2.0, then reveal it at the 5.0 arrival.
  ScriptedStrategy s;
  s.place = AdversaryPlacement{kGenesisId, kNever, {}};

  SUBCASE("reveal in the past is rejected") {
    s.pending_reveals = {{2, 3.0, {}}};  // handed over at t = 5
    bool second = false;
    // Arm the reveal only for the second honest arrival.
    struct Arming final : AttackStrategy {
      ScriptedStrategy* inner;
      bool* armed;
      explicit Arming(ScriptedStrategy* i, bool* a) : inner(i), armed(a) {}
      std::string_view name() const override { return "arming"; }
      void on_honest_arrival(const RunView& v, const Arrival& a,
                             StrategyActions& out) override {
        if (*armed)
          inner->on_honest_arrival(v, a, out);
        else {
          out.honest_delays.assign(v.n_miners(), 0.0);
          *armed = true;
        }
      }
      void on_adversary_arrival(const RunView& v, const Arrival& a,
                                StrategyActions& out) override {
        inner->on_adversary_arrival(v, a, out);
      }
    } arming(&s, &second);
    CHECK_THROWS_AS(run_with_strategy(arming, honest, adv, kSpecs, 1.0, 2), InvalidSchedule);
  }

  SUBCASE("a valid reveal delivers the block") {
    ScriptedStrategy s2;
    s2.place = AdversaryPlacement{kGenesisId, kNever, {}};
    s2.pending_reveals = {};
    // First honest arrival at 1.0 has nothing to reveal; adversary mines at
    // 2.0; second honest arrival at 5.0 reveals block 2 immediately.
    struct RevealAtSecond final : AttackStrategy {
      int honest_seen = 0;
      std::string_view name() const override { return "reveal-at-second"; }
      void on_honest_arrival(const RunView& v, const Arrival&,
                             StrategyActions& out) override {
        out.honest_delays.assign(v.n_miners(), 0.0);
        if (++honest_seen == 2) out.reveals.push_back({2, v.now(), {}});
      }
      void on_adversary_arrival(const RunView&, const Arrival&,
                                StrategyActions& out) override {
        out.placement = AdversaryPlacement{kGenesisId, kNever, {}};
      }
    } strat;
    const auto [tree, outcome] = run_with_strategy(strat, honest, adv, kSpecs, 1.0, 2);
    const std::int64_t adv_id = tree.adversary_block_id(0);
    CHECK(tree.visible_at(adv_id, 0) == 5.0);
    CHECK(tree.visible_at(adv_id, 1) == 5.0);
    CHECK(outcome.reveal_times == std::vector<double>{5.0});
  }
}

TEST_CASE("restart variant differs from plain private mining") {
  // With restart, after a reveal the next private block builds on the best
  // overall block instead of the stale private tip.
  bool saw_difference = false;
  for (std::uint64_t seed = 0; seed < 20 && !saw_difference; ++seed) {
    const TracePair tp = random_pair(120.0, 2, 400 + seed, {{0, 1.0, 1.0, 0.6}});
    auto plain = make_private_mining_strategy(false);
    auto restart = make_private_mining_strategy(true);
    const auto [t1, o1] = run_with_strategy(*plain, tp.honest, tp.adversary, kSpecs, 0.5, 2);
    const auto [t2, o2] = run_with_strategy(*restart, tp.honest, tp.adversary, kSpecs, 0.5, 2);
    saw_difference = dump_tree(t1) != dump_tree(t2);
  }
  CHECK(saw_difference);
}

TEST_CASE("make_strategy knows every name") {
  CHECK(make_strategy("none")->name() == "none");
  CHECK(make_strategy("full-delay")->name() == "full-delay");
  CHECK(make_strategy("private-mining")->name() == "private-mining");
  CHECK(make_strategy("private-mining-restart")->name() == "private-mining-restart");
  CHECK_THROWS_AS(make_strategy("bogus"), InvalidParameter);
}

TEST_CASE("stronger adversaries succeed more often") {
  // Mini phase check: attack success frequency at twice the honest growth
  // rate must exceed the frequency at half of it.
  const double delta = 0.5;
  const double lambda_h = 1.0 / (1.0 + delta);  // single type, h = 1
  int wins_low = 0, wins_high = 0;
  const int trials = 40;
  for (std::uint64_t i = 0; i < trials; ++i) {
    for (double ratio : {0.5, 2.0}) {
      const std::vector<BlockTypeSpec> specs = {{0, 1.0, 1.0, ratio * lambda_h}};
      const TracePair tp = random_pair(400.0, 2, 7000 + i * 2 + (ratio > 1.0), specs);
      auto strategy = make_private_mining_strategy(false);
      const auto [tree, out] =
          run_with_strategy(*strategy, tp.honest, tp.adversary, specs, delta, 2);
      if (!out.first_half_survivor) (ratio > 1.0 ? wins_high : wins_low)++;
    }
  }
  CHECK(wins_high > wins_low + trials / 4);
}
