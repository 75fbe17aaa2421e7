#include "forksim/arrivals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace forksim {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

// Ties are broken by (time, origin, type_id, miner_id); generation and
// merging both use this order before the ulp perturbation.
bool arrival_less(const Arrival& a, const Arrival& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.origin != b.origin) return a.origin < b.origin;
  if (a.type_id != b.type_id) return a.type_id < b.type_id;
  return a.miner_id < b.miner_id;
}

// Enforces strictly increasing times by bumping collided times one ulp at a
// time.  Arrivals pushed past the horizon are dropped.
void enforce_strict_order(std::vector<Arrival>& arrivals, double horizon) {
  std::stable_sort(arrivals.begin(), arrivals.end(), arrival_less);
  std::size_t out = 0;
  double last = -1.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    Arrival a = arrivals[i];
    if (a.time <= last)
      a.time = std::nextafter(last, std::numeric_limits<double>::infinity());
    if (a.time > horizon) continue;
    last = a.time;
    arrivals[out++] = a;
  }
  arrivals.resize(out);
}

}  // namespace

void validate_specs(const std::vector<BlockTypeSpec>& specs) {
  if (specs.empty()) throw InvalidParameter("specs: at least one block type is required");
  for (const auto& s : specs) {
    if (!(std::isfinite(s.score) && s.score > 0.0))
      throw InvalidParameter("specs: score must be positive and finite");
    if (!finite_nonneg(s.honest_rate))
      throw InvalidParameter("specs: honest_rate must be nonnegative and finite");
    if (!finite_nonneg(s.adversary_rate))
      throw InvalidParameter("specs: adversary_rate must be nonnegative and finite");
    if (s.type_id < 0) throw InvalidParameter("specs: type_id must be nonnegative");
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j)
      if (specs[i].type_id == specs[j].type_id)
        throw InvalidParameter("specs: duplicate type_id");
}

double total_honest_rate(const std::vector<BlockTypeSpec>& specs) {
  double r = 0.0;
  for (const auto& s : specs) r += s.honest_rate;
  return r;
}

double total_adversary_rate(const std::vector<BlockTypeSpec>& specs) {
  double r = 0.0;
  for (const auto& s : specs) r += s.adversary_rate;
  return r;
}

double adversary_score_rate(const std::vector<BlockTypeSpec>& specs) {
  double r = 0.0;
  for (const auto& s : specs) r += s.score * s.adversary_rate;
  return r;
}

double score_of(const std::vector<BlockTypeSpec>& specs, int type_id) {
  for (const auto& s : specs)
    if (s.type_id == type_id) return s.score;
  throw InvalidInput("unknown type_id");
}

ArrivalTrace generate_poisson_trace(double rate, double horizon, std::uint64_t seed,
                                    int type_id, Origin origin, int miner_id) {
  if (!finite_nonneg(rate)) throw InvalidParameter("rate must be nonnegative and finite");
  if (!(std::isfinite(horizon) && horizon >= 0.0))
    throw InvalidParameter("horizon must be nonnegative and finite");
  ArrivalTrace trace;
  trace.horizon = horizon;
  trace.seed = seed;
  if (rate == 0.0 || horizon == 0.0) return trace;
  Rng rng(seed);
  double t = rng.exponential(rate);
  while (t < horizon) {
    trace.arrivals.push_back({t, type_id, origin, miner_id});
    t += rng.exponential(rate);
  }
  return trace;
}

ArrivalTrace generate_typed_trace(const std::vector<BlockTypeSpec>& specs, Origin origin,
                                  int n_miners, double horizon, std::uint64_t seed) {
  validate_specs(specs);
  if (n_miners < 1) throw InvalidParameter("n_miners must be at least 1");
  if (!(std::isfinite(horizon) && horizon >= 0.0))
    throw InvalidParameter("horizon must be nonnegative and finite");
  ArrivalTrace trace;
  trace.horizon = horizon;
  trace.seed = seed;
  Rng root(seed);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& s = specs[k];
    if (origin == Origin::Honest) {
      const double per_miner = s.honest_rate / n_miners;
      if (per_miner == 0.0) continue;
      for (int m = 0; m < n_miners; ++m) {
        const std::uint64_t sub = root.split(2 * (k * 65536 + m)).seed();
        auto part = generate_poisson_trace(per_miner, horizon, sub, s.type_id, origin, m);
        trace.arrivals.insert(trace.arrivals.end(), part.arrivals.begin(),
                              part.arrivals.end());
      }
    } else {
      if (s.adversary_rate == 0.0) continue;
      const std::uint64_t sub = root.split(2 * (k * 65536) + 1).seed();
      auto part = generate_poisson_trace(s.adversary_rate, horizon, sub, s.type_id, origin,
                                         kAdversaryMiner);
      trace.arrivals.insert(trace.arrivals.end(), part.arrivals.begin(), part.arrivals.end());
    }
  }
  enforce_strict_order(trace.arrivals, horizon);
  return trace;
}

ArrivalTrace merge_traces(const ArrivalTrace& a, const ArrivalTrace& b) {
  ArrivalTrace merged;
  merged.horizon = std::max(a.horizon, b.horizon);
  merged.seed = a.seed;
  merged.arrivals.reserve(a.arrivals.size() + b.arrivals.size());
  merged.arrivals.insert(merged.arrivals.end(), a.arrivals.begin(), a.arrivals.end());
  merged.arrivals.insert(merged.arrivals.end(), b.arrivals.begin(), b.arrivals.end());
  enforce_strict_order(merged.arrivals, merged.horizon);
  return merged;
}

PuncturedTrace puncture_trace(const ArrivalTrace& base, double segment_len, double delta,
                              const SegmentScorer& scorer) {
  if (!(std::isfinite(segment_len) && segment_len > 0.0))
    throw InvalidParameter("segment_len must be positive and finite");
  if (!finite_nonneg(delta)) throw InvalidParameter("delta must be nonnegative and finite");
  if (!scorer) throw InvalidParameter("scorer must be callable");

  PuncturedTrace result;
  result.base = base;
  result.segment_len = segment_len;
  result.delta = delta;

  const double period = segment_len + delta;
  // The trailing puncture may stick out past the horizon; only the scored
  // part of each segment has to fit.
  const std::size_t n_segments =
      base.horizon >= segment_len
          ? static_cast<std::size_t>((base.horizon - segment_len) / period) + 1
          : 0;
  std::size_t i = 0;
  const auto& arr = base.arrivals;
  for (std::size_t k = 0; k < n_segments; ++k) {
    const double start = static_cast<double>(k) * period;
    const double end = start + segment_len;
    while (i < arr.size() && arr[i].time < start) ++i;
    const std::size_t first = i;
    while (i < arr.size() && arr[i].time < end) ++i;
    result.kept_arrivals.insert(result.kept_arrivals.end(), arr.begin() + first,
                                arr.begin() + i);
    const double s =
        scorer(std::span<const Arrival>(arr.data() + first, i - first), start);
    result.segment_scores.push_back(s);
    const double prev = result.cumulative_scores.empty() ? 0.0 : result.cumulative_scores.back();
    result.cumulative_scores.push_back(prev + s);
    // Skip the puncture; arrivals inside it are dropped.
    while (i < arr.size() && arr[i].time < start + period) ++i;
  }
  return result;
}

void write_trace(const ArrivalTrace& trace, std::ostream& out) {
  char buf[96];
  for (const auto& a : trace.arrivals) {
    std::snprintf(buf, sizeof buf, "%.9f\t%d\t%c\t%d\n", a.time, a.type_id,
                  a.origin == Origin::Honest ? 'H' : 'A', a.miner_id);
    out << buf;
  }
}

std::string trace_to_string(const ArrivalTrace& trace) {
  std::ostringstream out;
  write_trace(trace, out);
  return out.str();
}

ArrivalTrace read_trace(std::istream& in) {
  ArrivalTrace trace;
  std::string line;
  std::size_t lineno = 0;
  double last = -1.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double t;
    int type_id, miner;
    char origin;
    if (std::sscanf(line.c_str(), "%lf\t%d\t%c\t%d", &t, &type_id, &origin, &miner) != 4)
      throw InvalidInput("trace line " + std::to_string(lineno) + ": malformed record");
    if (!(std::isfinite(t) && t >= 0.0))
      throw InvalidInput("trace line " + std::to_string(lineno) + ": bad time");
    if (origin != 'H' && origin != 'A')
      throw InvalidInput("trace line " + std::to_string(lineno) + ": bad origin");
    if (t <= last)
      throw InvalidInput("trace line " + std::to_string(lineno) + ": times must increase");
    last = t;
    trace.arrivals.push_back(
        {t, type_id, origin == 'H' ? Origin::Honest : Origin::Adversary, miner});
  }
  trace.horizon = trace.arrivals.empty() ? 0.0 : trace.arrivals.back().time;
  return trace;
}

ArrivalTrace trace_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

}  // namespace forksim
