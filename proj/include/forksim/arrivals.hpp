// Arrival-process generation: Poisson traces, merged typed traces, punctured
// traces, and the line-oriented trace file format.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "forksim/rng.hpp"
#include "forksim/types.hpp"

namespace forksim {

// Homogeneous Poisson arrivals on [0, horizon).  rate may be zero (empty
// trace).  Negative or non-finite rate/horizon throws InvalidParameter.
ArrivalTrace generate_poisson_trace(double rate, double horizon, std::uint64_t seed,
                                    int type_id = 0, Origin origin = Origin::Honest,
                                    int miner_id = 0);

// Superposition of one Poisson process per (type, miner) for honest arrivals
// (each miner gets honest_rate / n_miners) or per type for the adversary.
// Arrivals are merged in time order; exact time ties are broken by
// (origin, type_id, miner_id) and then perturbed by one ulp so times end up
// strictly increasing.
ArrivalTrace generate_typed_trace(const std::vector<BlockTypeSpec>& specs, Origin origin,
                                  int n_miners, double horizon, std::uint64_t seed);

// Merge two traces into one strictly ordered trace (same tie rules).
ArrivalTrace merge_traces(const ArrivalTrace& a, const ArrivalTrace& b);

// Scores the kept arrivals of one pass segment.  Receives the segment's
// arrivals (absolute times) and the segment start time.
using SegmentScorer = std::function<double(std::span<const Arrival>, double segment_start)>;

// Result of removing length-delta punctures every segment_len seconds.
// Segment k keeps arrivals in [k*(segment_len+delta), k*(segment_len+delta)
// + segment_len); the following delta seconds are dropped.
struct PuncturedTrace {
  ArrivalTrace base;
  double segment_len = 0.0;
  double delta = 0.0;
  std::vector<Arrival> kept_arrivals;
  std::vector<double> segment_scores;
  std::vector<double> cumulative_scores;  // prefix sums of segment_scores
};

// Punctures `base` and scores each full segment with `scorer`.  Only whole
// segments that fit inside the horizon are scored.  segment_len must be
// positive; delta must be nonnegative.
PuncturedTrace puncture_trace(const ArrivalTrace& base, double segment_len, double delta,
                              const SegmentScorer& scorer);

// Trace file format: one arrival per line,
//   time<TAB>type_id<TAB>origin<TAB>miner_id
// with time printed with 9 fractional digits and origin as "H" or "A".
void write_trace(const ArrivalTrace& trace, std::ostream& out);
std::string trace_to_string(const ArrivalTrace& trace);

// Parses the format above.  Lines must be in strictly increasing time order;
// malformed lines throw InvalidInput with the line number.
ArrivalTrace read_trace(std::istream& in);
ArrivalTrace trace_from_string(const std::string& text);

}  // namespace forksim
