#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "forksim/arrivals.hpp"
#include "forksim/blocktree.hpp"
#include "forksim/errors.hpp"
#include "forksim/fully_delayed.hpp"
#include "forksim/rng.hpp"

using namespace forksim;

namespace {

const std::vector<BlockTypeSpec> kUnit = {{0, 1.0, 1.0, 0.2}};

ArrivalTrace two_miner_trace() {
  ArrivalTrace t;
  t.horizon = 6.0;
  t.arrivals.push_back({1.0, 0, Origin::Honest, 0});
  t.arrivals.push_back({1.3, 0, Origin::Honest, 1});
  t.arrivals.push_back({3.0, 0, Origin::Honest, 1});
  return t;
}

DelaySchedule two_miner_schedule() {
  DelaySchedule s;
  s.honest_delays = {{0.0, 1.0},    // block A: miner 1 sees it at 2.0
                     {0.5, 0.0},    // block B: miner 0 sees it at 1.8
                     {1.0, 0.0}};   // block C: miner 0 sees it at 4.0
  return s;
}

// Brute-force fork choice oracle: scan every block the miner can see.
std::int64_t tip_oracle(const BlockTree& tree, double t, int miner) {
  std::int64_t best = kGenesisId;
  for (const Block& b : tree.blocks()) {
    if (tree.visible_at(b.id, miner) > t) continue;
    const Block& cur = tree.block(best);
    if (b.chain_score > cur.chain_score ||
        (b.chain_score == cur.chain_score && b.id < cur.id))
      best = b.id;
  }
  return best;
}

}  // namespace

TEST_CASE("hand-built two-miner fork") {
  const BlockTree tree = build_tree(two_miner_trace(), {}, two_miner_schedule(), kUnit, 1.0, 2);

  REQUIRE(tree.size() == 4);  // genesis + 3
  const std::int64_t a = tree.honest_block_id(0);
  const std::int64_t b = tree.honest_block_id(1);
  const std::int64_t c = tree.honest_block_id(2);
  CHECK(a == 1);
  CHECK(b == 2);
  CHECK(c == 3);

  // B's miner cannot see A at 1.3, so A and B fork off genesis; C sees both
  // at 3.0, ties at score 1, and picks the lower id (A).
  CHECK(tree.block(a).parent == kGenesisId);
  CHECK(tree.block(b).parent == kGenesisId);
  CHECK(tree.block(c).parent == a);
  CHECK(tree.block(c).chain_score == 2.0);

  CHECK(tree.visible_at(a, 0) == 1.0);  // own block at mine time
  CHECK(tree.visible_at(a, 1) == 2.0);
  CHECK(tree.visible_at(b, 0) == 1.8);
  CHECK(tree.visible_at(b, 1) == 1.3);
  CHECK(tree.visible_to_all_at(c) == 4.0);

  CHECK(tree.is_ancestor(kGenesisId, c));
  CHECK(tree.is_ancestor(a, c));
  CHECK(!tree.is_ancestor(b, c));
  CHECK(!tree.is_ancestor(c, a));
}

TEST_CASE("hand-built fork choice queries") {
  const BlockTree tree = build_tree(two_miner_trace(), {}, two_miner_schedule(), kUnit, 1.0, 2);
  const std::int64_t a = 1, b = 2, c = 3;

  CHECK(tree.tip(0.5, 0) == kGenesisId);
  CHECK(tree.tip(1.0, 0) == a);
  CHECK(tree.tip(1.9, 0) == a);  // sees A and B at score 1, lower id wins
  CHECK(tree.tip(1.5, 1) == b);
  CHECK(tree.tip(3.0, 1) == c);
  CHECK(tree.tip(3.9, 0) == a);
  CHECK(tree.tip(4.0, 0) == c);

  CHECK(tree.canonical_score(1.9, 0) == 1.0);
  CHECK(tree.canonical_score(3.0, 1) == 2.0);
  // All-miner canonical score waits for delivery to everyone.
  CHECK(tree.canonical_score(1.9) == 1.0);    // A from 2.0? not yet; B from 1.8
  CHECK(tree.canonical_score(1.7) == 0.0);
  CHECK(tree.canonical_score(3.9) == 1.0);
  CHECK(tree.canonical_score(4.0) == 2.0);

  CHECK(tree.best_honest_score_mined_by(0.9) == 0.0);
  CHECK(tree.best_honest_score_mined_by(1.0) == 1.0);
  CHECK(tree.best_honest_score_mined_by(3.0) == 2.0);
}

TEST_CASE("adversary request joins the tree on release") {
  const std::vector<AdversaryBlockRequest> reqs = {{2.0, 0, 1}};
  DelaySchedule s = two_miner_schedule();
  s.adversary_release = {{4.0, {0.5, 0.0}}};
  const BlockTree tree = build_tree(two_miner_trace(), reqs, s, kUnit, 1.0, 2);

  REQUIRE(tree.size() == 5);
  const std::int64_t adv = tree.adversary_block_id(0);
  CHECK(adv == 3);  // mined at 2.0, before C at 3.0
  CHECK(tree.block(adv).parent == 1);
  CHECK(tree.block(adv).origin == Origin::Adversary);
  CHECK(tree.block(adv).chain_score == 2.0);
  CHECK(tree.visible_at(adv, 0) == 4.5);
  CHECK(tree.visible_at(adv, 1) == 4.0);

  // Canonical honest score ignores the adversary block.
  CHECK(tree.canonical_score(5.0) == 2.0);
  // But the fork choice does not: at 4.0 miner 1 compares C (id 4, score 2)
  // with the adversary block (id 3, score 2) and the lower id wins.
  CHECK(tree.honest_block_id(2) == 4);
  CHECK(tree.tip(4.0, 1) == adv);
}

TEST_CASE("withheld adversary blocks never deliver") {
  const std::vector<AdversaryBlockRequest> reqs = {{2.0, 0, 1}};
  DelaySchedule s = two_miner_schedule();
  s.adversary_release = {{kNever, {}}};
  const BlockTree tree = build_tree(two_miner_trace(), reqs, s, kUnit, 1.0, 2);
  const std::int64_t adv = tree.adversary_block_id(0);
  CHECK(tree.visible_at(adv, 0) == kNever);
  CHECK(tree.visible_at(adv, 1) == kNever);
  CHECK(tree.visible_to_all_at(adv) == kNever);
  CHECK(tree.tip(100.0, 1) != adv);
}

TEST_CASE("schedule validation") {
  const ArrivalTrace t = two_miner_trace();
  DelaySchedule s = two_miner_schedule();

  DelaySchedule missing = s;
  missing.honest_delays.pop_back();
  CHECK_THROWS_AS(build_tree(t, {}, missing, kUnit, 1.0, 2), ScheduleIncomplete);

  DelaySchedule short_row = s;
  short_row.honest_delays[0] = {0.0};
  CHECK_THROWS_AS(build_tree(t, {}, short_row, kUnit, 1.0, 2), ScheduleIncomplete);

  DelaySchedule too_big = s;
  too_big.honest_delays[0][1] = 1.5;
  CHECK_THROWS_AS(build_tree(t, {}, too_big, kUnit, 1.0, 2), InvalidSchedule);

  DelaySchedule negative = s;
  negative.honest_delays[0][1] = -0.1;
  CHECK_THROWS_AS(build_tree(t, {}, negative, kUnit, 1.0, 2), InvalidSchedule);

  // Adversary: broadcast before mine time, or parent not yet mined.
  DelaySchedule early = s;
  early.adversary_release = {{1.5, {}}};
  CHECK_THROWS_AS(build_tree(t, {{2.0, 0, 1}}, early, kUnit, 1.0, 2), InvalidSchedule);

  DelaySchedule fine = s;
  fine.adversary_release = {{2.0, {}}};
  CHECK_THROWS_AS(build_tree(t, {{2.0, 0, 3}}, fine, kUnit, 1.0, 2), InvalidSchedule);

  ArrivalTrace unsorted = t;
  std::swap(unsorted.arrivals[0], unsorted.arrivals[1]);
  CHECK_THROWS_AS(build_tree(unsorted, {}, s, kUnit, 1.0, 2), InvalidInput);
}

TEST_CASE("dump_tree format is frozen") {
  const BlockTree tree = build_tree(two_miner_trace(), {}, two_miner_schedule(), kUnit, 1.0, 2);
  const std::string expected =
      "0\t-1\t-1\tG\t-1\t0.000000000\t0.000000000\n"
      "1\t0\t0\tH\t0\t1.000000000\t1.000000000\n"
      "2\t0\t0\tH\t1\t1.300000000\t1.000000000\n"
      "3\t1\t0\tH\t1\t3.000000000\t2.000000000\n";
  CHECK(dump_tree(tree) == expected);
}

TEST_CASE("distinct miners with full delays reproduce the fully-delayed chain") {
  // One miner per arrival makes the own-block exception irrelevant, so the
  // realized tree must equal the miner-free fully-delayed construction.
  const std::vector<BlockTypeSpec> specs = {{0, 1.0, 1.0, 0.0}};
  const double delta = 0.8;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    ArrivalTrace t = generate_poisson_trace(1.0, 40.0, seed);
    const int n = int(t.arrivals.size());
    REQUIRE(n > 5);
    for (int i = 0; i < n; ++i) t.arrivals[i].miner_id = i;

    DelaySchedule s;
    s.honest_delays.assign(n, std::vector<double>(n, delta));
    const BlockTree tree = build_tree(t, {}, s, specs, delta, n);
    const FullyDelayedChain fd = build_fully_delayed_chain(t, delta, specs);

    for (int i = 0; i < n; ++i) {
      const Block& b = tree.block(tree.honest_block_id(i));
      CHECK(b.chain_score == fd.block_scores[i]);
      const std::int64_t parent_arrival =
          fd.parents[i] < 0 ? kGenesisId : tree.honest_block_id(std::size_t(fd.parents[i]));
      CHECK(b.parent == parent_arrival);
    }
  }
}

TEST_CASE("random schedules: tip matches the brute-force oracle") {
  Rng rng(99);
  for (int run = 0; run < 30; ++run) {
    const int n_miners = 1 + int(rng.below(4));
    const double delta = rng.uniform(0.0, 2.0);
    ArrivalTrace t = generate_poisson_trace(1.0, 20.0, rng.next_u64());
    for (auto& a : t.arrivals) a.miner_id = int(rng.below(std::uint64_t(n_miners)));

    DelaySchedule s;
    for (std::size_t i = 0; i < t.arrivals.size(); ++i) {
      std::vector<double> row(n_miners);
      for (auto& d : row) d = rng.uniform(0.0, delta);
      s.honest_delays.push_back(row);
    }
    const BlockTree tree = build_tree(t, {}, s, kUnit, delta, n_miners);

    for (int k = 0; k < 40; ++k) {
      const double q = rng.uniform(0.0, 22.0);
      const int m = int(rng.below(std::uint64_t(n_miners)));
      REQUIRE(tree.tip(q, m) == tip_oracle(tree, q, m));
    }
  }
}

TEST_CASE("visibility respects the delay bound") {
  Rng rng(7);
  const int n_miners = 3;
  const double delta = 1.5;
  ArrivalTrace t = generate_poisson_trace(2.0, 30.0, 5);
  for (auto& a : t.arrivals) a.miner_id = int(rng.below(n_miners));
  DelaySchedule s;
  for (std::size_t i = 0; i < t.arrivals.size(); ++i) {
    std::vector<double> row(n_miners);
    for (auto& d : row) d = rng.uniform(0.0, delta);
    s.honest_delays.push_back(row);
  }
  const BlockTree tree = build_tree(t, {}, s, kUnit, delta, n_miners);
  for (std::size_t i = 0; i < t.arrivals.size(); ++i) {
    const Block& b = tree.block(tree.honest_block_id(i));
    CHECK(tree.visible_at(b.id, b.miner_id) == b.mine_time);
    for (int m = 0; m < n_miners; ++m) {
      CHECK(tree.visible_at(b.id, m) >= b.mine_time);
      CHECK(tree.visible_at(b.id, m) <= b.mine_time + delta);
    }
  }
}
