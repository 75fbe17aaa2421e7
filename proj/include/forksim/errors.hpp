// Error types thrown by the simulator and the estimators.
#pragma once

#include <stdexcept>
#include <string>

namespace forksim {

// A caller passed a value outside the documented domain of an operation.
struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An interval query with end < start, or otherwise malformed bounds.
struct InvalidInterval : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A loner-interval query violating its preconditions (center too early,
// horizon too short, nonpositive half-width).
struct InvalidQuery : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A delay schedule entry lies outside the legal range.
struct InvalidSchedule : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A delay schedule does not cover every block of the run.
struct ScheduleIncomplete : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A block id or record that does not refer to a usable entity.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An estimator was asked for a statistic it has no data for.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Segment length too small for the random-walk construction to have
// positive drift.
struct SegmentTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration file problems: parse errors, unknown keys, bad field values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace forksim
