#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqscore/monitor.hpp"
#include "seqscore/multiple_testing.hpp"

namespace seqscore {

/// One logged event. `covariates` excludes the intercept.
struct EventRecord {
  std::string timestamp;
  std::string variant;
  double response = 0.0;
  std::vector<double> covariates;
  /// 1-based source line, 0 for generated records.
  std::size_t line = 0;
};

enum class InputFormat { auto_detect, delimited, json_lines };

struct ReaderOptions {
  /// Strict mode throws MalformedRecord on the first bad line; lenient mode
  /// skips it and counts it in EventReader::skipped().
  bool strict = true;
  std::string covariate_prefix = "x";
  InputFormat format = InputFormat::auto_detect;
};

/// Reads event logs in either of two shapes:
///  - delimited text (comma or tab) with a header naming `timestamp`,
///    `variant` (or `variant_id`), `response`, and covariate columns that
///    start with the covariate prefix, in header order;
///  - JSON lines with keys `timestamp`, `variant`, `response` and a
///    `covariates` array.
/// Blank lines and lines starting with '#' are ignored. Timestamps must be
/// non-decreasing (numeric comparison when both parse as numbers).
class EventReader {
 public:
  EventReader(std::istream& in, ReaderOptions options = {});

  std::optional<EventRecord> next();
  /// The record the next call to next() returns, without consuming it.
  const EventRecord* peek();

  std::size_t skipped() const { return skipped_; }
  std::size_t line() const { return line_; }
  /// Covariates per record, known after the header or first JSON record.
  std::optional<int> covariate_count() const { return covariate_count_; }

 private:
  EventRecord parse_delimited(const std::string& text) const;
  EventRecord parse_json(const std::string& text) const;
  void read_header(const std::string& text);
  void check_order(const EventRecord& record);
  std::optional<EventRecord> read_record();

  std::istream& in_;
  ReaderOptions options_;
  InputFormat format_;
  char delimiter_ = ',';
  bool header_done_ = false;
  int timestamp_col_ = -1;
  int variant_col_ = -1;
  int response_col_ = -1;
  std::vector<int> covariate_cols_;
  std::size_t columns_ = 0;
  std::optional<int> covariate_count_;
  std::optional<std::string> last_timestamp_;
  std::size_t line_ = 0;
  std::size_t skipped_ = 0;
  std::optional<EventRecord> peeked_;
};

std::vector<EventRecord> read_events(std::istream& in, const ReaderOptions& options = {},
                                     std::size_t* skipped = nullptr);

/// Pairwise comparison session: events of `control_variant` go to the
/// control arm, events of `treatment_variant` to the treatment arm.
struct SessionConfig {
  MonitorConfig monitor;
  std::string control_variant = "A";
  std::string treatment_variant = "B";

  std::string canonical() const;
  /// crc32 of canonical(), as 8 hex digits.
  std::string hash() const;
};

class Session {
 public:
  static constexpr int kStateVersion = 1;

  explicit Session(SessionConfig config);

  /// Throws MalformedRecord (with the record's line) for unknown variants or
  /// records the monitor rejects. Every call counts towards records_seen().
  std::optional<Checkpoint> consume(const EventRecord& record);
  /// Emits the partial checkpoint for an unfinished batch at end of stream.
  std::optional<Checkpoint> finish();

  bool finished() const { return monitor_.finished(); }
  std::int64_t records_seen() const { return records_seen_; }
  const SequentialMonitor& monitor() const { return monitor_; }
  const SessionConfig& config() const { return config_; }

  /// Versioned, checksummed blob:
  ///   "seqscore-state <version> <crc32 of payload> <config hash>\n<payload>"
  std::string snapshot_state() const;
  /// Throws StateError on a bad header, version mismatch, checksum mismatch
  /// or a configuration hash that differs from `config`.
  static Session restore_state(SessionConfig config, std::string_view blob);

 private:
  SessionConfig config_;
  SequentialMonitor monitor_;
  std::int64_t records_seen_ = 0;
};

struct IngestOptions {
  bool strict = true;
  /// Write the session state every this many checkpoints (0 = never).
  int snapshot_every = 0;
  std::string state_file;
  /// Records to skip before consuming (resuming a replay of the same file).
  std::int64_t skip_records = 0;
  /// Emit a partial checkpoint at end of input. Live monitoring with a
  /// state file turns this off so the next run continues the batch.
  bool flush_at_end = true;
};

struct IngestSummary {
  std::size_t checkpoints = 0;
  std::size_t skipped = 0;
  std::optional<Decision> decision;
  double p_value = 1.0;
};

/// Feeds records to the session, writing one checkpoint record per line to
/// `out`, until the session finishes or the input ends.
IngestSummary ingest(EventReader& reader, Session& session, std::ostream& out, const IngestOptions& options);

/// Writes `blob` to `path` via a temporary file and rename.
void write_state_file(const std::string& path, const std::string& blob);
std::string read_state_file(const std::string& path);

struct PairResult {
  std::string control;
  std::string treatment;
  std::string label;
  std::optional<double> p_value;
  std::int64_t n1 = 0;
  std::int64_t n0 = 0;
  bool deferred = false;
  bool rejected = false;
};

struct PairwiseReport {
  double alpha = 0.05;
  std::vector<PairResult> pairs;
  /// Comparisons entering the correction (deferred pairs excluded).
  std::size_t m = 0;
  Rejections rejections;
};

/// Runs all k(k-1)/2 comparisons (earlier variant = control) to `stop_n`
/// observations per arm, then applies bh_correlated to their p-values.
/// Pairs that run out of events first are reported as deferred.
PairwiseReport pairwise_compare(std::span<const EventRecord> events, const std::vector<std::string>& variants,
                                std::int64_t stop_n, const MonitorConfig& base, unsigned threads = 0);

/// Reassigns each event (optionally only those of `source_variant`) to
/// variant "A" or "B" by a fair coin drawn from `seed`.
std::vector<EventRecord> aa_relabel(std::span<const EventRecord> events, std::uint64_t seed,
                                    const std::optional<std::string>& source_variant = std::nullopt);

/// Synthetic click log: each event picks a variant uniformly, draws five
/// simplex features from Dirichlet(1,...,1) and keeps the last four as
/// covariates; the click is Bernoulli with logit (theta0 + effect_v)'x.
struct EventLogSpec {
  std::vector<std::string> variants{"A", "B"};
  /// Per-variant effect on top of theta0, length 5 each (empty = zero).
  std::vector<Vector> effects;
  Vector theta0;
  std::int64_t events = 20000;
  std::uint64_t seed = 1;
};

std::vector<EventRecord> generate_event_log(const EventLogSpec& spec);
void write_event_log(std::ostream& out, std::span<const EventRecord> events);

}  // namespace seqscore
