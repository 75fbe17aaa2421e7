// Domain types shared by every module: block type specs and arrival traces.
#pragma once

#include <cstdint>
#include <vector>

#include "forksim/errors.hpp"

namespace forksim {

enum class Origin : std::uint8_t { Honest = 0, Adversary = 1 };

// miner_id used for adversary arrivals (the adversary is a single actor).
constexpr int kAdversaryMiner = -1;

// A block type: its chain-weight contribution and the Poisson rates at which
// honest miners (aggregate) and the adversary produce blocks of this type.
struct BlockTypeSpec {
  int type_id = 0;
  double score = 1.0;
  double honest_rate = 0.0;
  double adversary_rate = 0.0;
};

// Throws InvalidParameter unless every score is positive and finite, every
// rate is nonnegative and finite, and type ids are unique and nonnegative.
void validate_specs(const std::vector<BlockTypeSpec>& specs);

double total_honest_rate(const std::vector<BlockTypeSpec>& specs);
double total_adversary_rate(const std::vector<BlockTypeSpec>& specs);
// Sum of score * adversary_rate: the exact adversary score growth rate.
double adversary_score_rate(const std::vector<BlockTypeSpec>& specs);
// Score of the given type id; throws InvalidInput if the id is unknown.
double score_of(const std::vector<BlockTypeSpec>& specs, int type_id);

struct Arrival {
  double time = 0.0;
  int type_id = 0;
  Origin origin = Origin::Honest;
  int miner_id = kAdversaryMiner;
};

// A finite realization of the mining process: arrival times are strictly
// increasing, all within [0, horizon].
struct ArrivalTrace {
  std::vector<Arrival> arrivals;
  double horizon = 0.0;
  std::uint64_t seed = 0;
};

}  // namespace forksim
