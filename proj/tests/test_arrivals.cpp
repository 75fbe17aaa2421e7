#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "forksim/arrivals.hpp"
#include "forksim/errors.hpp"
#include "forksim/stats.hpp"

using namespace forksim;

namespace {

ArrivalTrace manual_trace(std::vector<double> times, Origin origin, double horizon) {
  ArrivalTrace t;
  t.horizon = horizon;
  for (double x : times) t.arrivals.push_back({x, 0, origin, origin == Origin::Honest ? 0 : -1});
  return t;
}

}  // namespace

TEST_CASE("poisson trace has the right count and ordering") {
  const double rate = 2.0, horizon = 500.0;
  const ArrivalTrace t = generate_poisson_trace(rate, horizon, 42);
  const double expected = rate * horizon;
  // 4 sigma band for a Poisson count.
  CHECK(std::abs(double(t.arrivals.size()) - expected) < 4.0 * std::sqrt(expected));
  for (std::size_t i = 0; i < t.arrivals.size(); ++i) {
    REQUIRE(t.arrivals[i].time >= 0.0);
    REQUIRE(t.arrivals[i].time <= horizon);
    if (i) REQUIRE(t.arrivals[i].time > t.arrivals[i - 1].time);
    REQUIRE(t.arrivals[i].origin == Origin::Honest);
    REQUIRE(t.arrivals[i].miner_id == 0);
  }
  CHECK(t.horizon == horizon);
  CHECK(t.seed == 42);
}

TEST_CASE("poisson trace is deterministic in the seed") {
  const ArrivalTrace a = generate_poisson_trace(1.5, 100.0, 7);
  const ArrivalTrace b = generate_poisson_trace(1.5, 100.0, 7);
  const ArrivalTrace c = generate_poisson_trace(1.5, 100.0, 8);
  CHECK(trace_to_string(a) == trace_to_string(b));
  CHECK(trace_to_string(a) != trace_to_string(c));
}

TEST_CASE("poisson trace domain checks") {
  CHECK(generate_poisson_trace(0.0, 10.0, 1).arrivals.empty());
  CHECK_THROWS_AS(generate_poisson_trace(-1.0, 10.0, 1), InvalidParameter);
  CHECK_THROWS_AS(generate_poisson_trace(1.0, -10.0, 1), InvalidParameter);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(generate_poisson_trace(1.0, inf, 1), InvalidParameter);
}

TEST_CASE("poisson arrival times are uniform given the count") {
  const ArrivalTrace t = generate_poisson_trace(1.0, 2000.0, 11);
  std::vector<double> u;
  for (const auto& a : t.arrivals) u.push_back(a.time / t.horizon);
  CHECK(ks_uniform_pvalue(u) > 1e-3);
}

TEST_CASE("typed trace splits rates across types and miners") {
  const std::vector<BlockTypeSpec> specs = {{0, 1.0, 2.0, 0.0}, {1, 5.0, 0.5, 0.0}};
  const int n_miners = 4;
  const double horizon = 2000.0;
  const ArrivalTrace t = generate_typed_trace(specs, Origin::Honest, n_miners, horizon, 3);

  std::map<int, int> by_type;
  std::map<int, int> by_miner;
  double prev = -1.0;
  for (const auto& a : t.arrivals) {
    REQUIRE(a.time > prev);
    prev = a.time;
    REQUIRE(a.origin == Origin::Honest);
    REQUIRE(a.miner_id >= 0);
    REQUIRE(a.miner_id < n_miners);
    by_type[a.type_id]++;
    by_miner[a.miner_id]++;
  }
  CHECK(std::abs(by_type[0] - 2.0 * horizon) < 4.0 * std::sqrt(2.0 * horizon));
  CHECK(std::abs(by_type[1] - 0.5 * horizon) < 4.0 * std::sqrt(0.5 * horizon));
  // Each miner carries total rate 2.5 / 4.
  const double per_miner = 2.5 * horizon / n_miners;
  for (int m = 0; m < n_miners; ++m)
    CHECK(std::abs(by_miner[m] - per_miner) < 4.0 * std::sqrt(per_miner));
}

TEST_CASE("adversary typed trace uses the adversary rates and miner id") {
  const std::vector<BlockTypeSpec> specs = {{0, 1.0, 2.0, 0.3}};
  const ArrivalTrace t = generate_typed_trace(specs, Origin::Adversary, 4, 1000.0, 5);
  CHECK(std::abs(double(t.arrivals.size()) - 300.0) < 4.0 * std::sqrt(300.0));
  for (const auto& a : t.arrivals) {
    REQUIRE(a.origin == Origin::Adversary);
    REQUIRE(a.miner_id == kAdversaryMiner);
  }
}

TEST_CASE("merge_traces interleaves and keeps strict order") {
  ArrivalTrace h = manual_trace({1.0, 3.0}, Origin::Honest, 10.0);
  ArrivalTrace a = manual_trace({2.0, 3.0}, Origin::Adversary, 10.0);
  const ArrivalTrace m = merge_traces(h, a);
  REQUIRE(m.arrivals.size() == 4);
  CHECK(m.arrivals[0].time == 1.0);
  CHECK(m.arrivals[1].time == 2.0);
  // The tie at t=3 is broken honest first, and the adversary copy is bumped
  // by one ulp so times stay strictly increasing.
  CHECK(m.arrivals[2].origin == Origin::Honest);
  CHECK(m.arrivals[3].origin == Origin::Adversary);
  CHECK(m.arrivals[3].time > m.arrivals[2].time);
  CHECK(m.arrivals[3].time == std::nextafter(3.0, 4.0));
}

TEST_CASE("puncture keeps exactly the in-segment arrivals") {
  // horizon 10, segment 2, puncture 1: segments [0,2), [3,5), [6,8) and the
  // third puncture [8,9) still counts segment 3 as whole.
  ArrivalTrace base = manual_trace({0.5, 2.5, 3.5, 7.9, 8.5}, Origin::Honest, 10.0);
  const SegmentScorer count_scorer = [](std::span<const Arrival> seg, double) {
    return static_cast<double>(seg.size());
  };
  const PuncturedTrace p = puncture_trace(base, 2.0, 1.0, count_scorer);
  REQUIRE(p.segment_scores.size() == 3);
  CHECK(p.segment_scores[0] == 1.0);
  CHECK(p.segment_scores[1] == 1.0);
  CHECK(p.segment_scores[2] == 1.0);
  REQUIRE(p.kept_arrivals.size() == 3);
  CHECK(p.kept_arrivals[0].time == 0.5);
  CHECK(p.kept_arrivals[1].time == 3.5);
  CHECK(p.kept_arrivals[2].time == 7.9);
  REQUIRE(p.cumulative_scores.size() == 3);
  CHECK(p.cumulative_scores[2] == 3.0);
}

TEST_CASE("puncture with zero delta keeps everything") {
  const ArrivalTrace base = generate_poisson_trace(1.0, 100.0, 13);
  const SegmentScorer count_scorer = [](std::span<const Arrival> seg, double) {
    return static_cast<double>(seg.size());
  };
  const PuncturedTrace p = puncture_trace(base, 10.0, 0.0, count_scorer);
  REQUIRE(p.segment_scores.size() == 10);
  CHECK(p.kept_arrivals.size() == base.arrivals.size());
  double total = 0.0;
  for (double s : p.segment_scores) total += s;
  CHECK(total == double(base.arrivals.size()));
}

TEST_CASE("puncture domain checks") {
  const ArrivalTrace base = generate_poisson_trace(1.0, 10.0, 1);
  const SegmentScorer s = [](std::span<const Arrival>, double) { return 0.0; };
  CHECK_THROWS_AS(puncture_trace(base, 0.0, 1.0, s), InvalidParameter);
  CHECK_THROWS_AS(puncture_trace(base, 1.0, -1.0, s), InvalidParameter);
}

TEST_CASE("punctured segment counts look i.i.d.") {
  const ArrivalTrace base = generate_poisson_trace(1.0, 20000.0, 17);
  const SegmentScorer count_scorer = [](std::span<const Arrival> seg, double) {
    return static_cast<double>(seg.size());
  };
  const PuncturedTrace p = puncture_trace(base, 10.0, 1.0, count_scorer);
  const auto& s = p.segment_scores;
  REQUIRE(s.size() > 1000);
  const double m = mean(s);
  CHECK(std::abs(m - 10.0) < 4.0 * std::sqrt(10.0 / double(s.size())));
  // Lag-1 autocorrelation of i.i.d. scores is O(1/sqrt(n)).
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    c0 += (s[i] - m) * (s[i] - m);
    if (i) c1 += (s[i] - m) * (s[i - 1] - m);
  }
  CHECK(std::abs(c1 / c0) < 4.0 / std::sqrt(double(s.size())));
}

TEST_CASE("trace io round trips byte for byte") {
  const std::vector<BlockTypeSpec> specs = {{0, 1.0, 1.0, 0.2}, {1, 2.0, 0.3, 0.1}};
  const ArrivalTrace h = generate_typed_trace(specs, Origin::Honest, 3, 200.0, 21);
  const ArrivalTrace a = generate_typed_trace(specs, Origin::Adversary, 3, 200.0, 22);
  for (const ArrivalTrace* t : {&h, &a}) {
    const std::string text = trace_to_string(*t);
    ArrivalTrace back = trace_from_string(text);
    back.horizon = t->horizon;  // the file format carries arrivals only
    CHECK(trace_to_string(back) == text);
  }
}

TEST_CASE("trace parser rejects malformed input") {
  CHECK_THROWS_AS(trace_from_string("1.0\t0\tH\n"), InvalidInput);          // missing column
  CHECK_THROWS_AS(trace_from_string("1.0\t0\tX\t0\n"), InvalidInput);       // bad origin
  CHECK_THROWS_AS(trace_from_string("abc\t0\tH\t0\n"), InvalidInput);       // bad time
  CHECK_THROWS_AS(trace_from_string("2.0\t0\tH\t0\n1.0\t0\tH\t0\n"),
                  InvalidInput);  // decreasing times
}
