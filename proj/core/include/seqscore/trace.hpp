#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "seqscore/score.hpp"

namespace seqscore {

/// One monitoring checkpoint of a sequential test. The mixture statistic
/// and its running maximum are kept in the log domain.
struct Checkpoint {
  std::int64_t n1 = 0;
  std::int64_t n0 = 0;
  /// Empty when the checkpoint was deferred.
  std::optional<double> log_lambda_mix;
  double log_running_max = -std::numeric_limits<double>::infinity();
  double p_value = 1.0;
  bool deferred = false;
  /// The test has rejected at or before this checkpoint.
  bool decided = false;
  /// Emitted at end of stream for a batch that did not fill up.
  bool partial = false;
  DeferReason reason = DeferReason::none;
};

struct Decision {
  std::size_t stop_index = 0;
  std::int64_t n1 = 0;
  std::int64_t n0 = 0;
};

/// Checkpoint history and stopping decision for one comparison.
/// p-values are non-increasing; running_max is non-decreasing.
struct SstTrace {
  double alpha = 0.05;
  std::vector<Checkpoint> checkpoints;
  std::optional<Decision> decision;
  double log_running_max = -std::numeric_limits<double>::infinity();

  double p_value() const;
  bool empty() const { return checkpoints.empty(); }
};

/// min(1, exp(-log_max)).
double p_value_from_log_max(double log_max);

/// The stopping boundary: running maximum of the mixture statistic at or
/// above 1/alpha, compared on the log scale. Equivalent to p <= alpha except
/// for rounding in exp() exactly at the boundary, where the log comparison
/// is the one that holds.
bool reaches_boundary(double log_max, double alpha);

/// Appends a checkpoint. A deferred checkpoint (no statistic) carries the
/// running maximum forward. The first checkpoint with p <= alpha records the
/// decision (see reaches_boundary).
const Checkpoint& update_trace(SstTrace& trace, std::optional<double> log_lambda_mix, std::int64_t n1,
                               std::int64_t n0, DeferReason reason = DeferReason::none,
                               bool partial = false);

/// First checkpoint index at which the trace reaches the boundary for alpha.
std::optional<std::size_t> stop_index(const SstTrace& trace, double alpha);

/// One line-delimited record with fields, in order:
/// n1, n0, log_lambda_mix (null when deferred), p_value, deferred, decided, partial.
std::string to_record(const Checkpoint& checkpoint);

void write_trace(std::ostream& out, const SstTrace& trace);

}  // namespace seqscore
