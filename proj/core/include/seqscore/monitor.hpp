#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "seqscore/msprt.hpp"
#include "seqscore/nuisance.hpp"
#include "seqscore/score.hpp"
#include "seqscore/sst.hpp"
#include "seqscore/trace.hpp"

namespace seqscore {

enum class Method { sst, msprt };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

/// Everything that determines how one comparison is monitored.
struct MonitorConfig {
  FamilySpec family;
  Method method = Method::sst;
  /// Covariates per observation, excluding the intercept.
  int p = 1;
  /// Null effect; empty means the zero vector of length p + 1.
  Vector beta0;
  double tau = 1.0;
  double alpha = 0.05;
  /// Events (across both arms) between checkpoints.
  int batch = 200;
  /// The test ends once both arms hold at least this many observations.
  std::int64_t cap_n = 10000;
  bool stop_on_reject = true;
  /// mSPRT on normal responses: plug-in arm variances instead of the
  /// known dispersion.
  bool msprt_plugin_variance = false;
  FitOptions fit;

  /// Fills defaults and throws ConfigError on invalid combinations.
  void validate();
  Vector null_effect() const;
  PriorSpec prior() const { return {null_effect(), tau}; }

  /// Stable text form of every field above, used for configuration hashes.
  std::string canonical() const;
};

/// One observation. `covariates` excludes the intercept and must outlive the
/// call that consumes it.
struct Observation {
  double response = 0.0;
  Arm arm = Arm::control;
  std::span<const double> covariates;
};

/// Running state of one sequential comparison: per-arm stores, the last
/// control fit (warm start), and the checkpoint trace. Single writer.
class SequentialMonitor {
 public:
  explicit SequentialMonitor(MonitorConfig config);

  /// Adds one observation and returns the checkpoint it completed, if any.
  /// Throws MalformedRecord (position = observation index) for records of the
  /// wrong shape or outside the family's support. Ignores input once
  /// finished().
  std::optional<Checkpoint> observe(const Observation& obs);

  /// Emits a partial checkpoint for a batch cut short by end of stream.
  std::optional<Checkpoint> flush();

  /// Stopped by rejection (when stop_on_reject) or by the sample cap.
  bool finished() const { return finished_; }

  const SstTrace& trace() const { return trace_; }
  const MonitorConfig& config() const { return config_; }
  std::int64_t events() const { return events_; }
  std::int64_t treatment_count() const;
  std::int64_t control_count() const;

  /// Snapshot from the most recent non-deferred SST checkpoint.
  const std::optional<ScoreSnapshot>& last_snapshot() const { return last_snapshot_; }

  /// Serialized state (JSON text). Restoring with the same configuration and
  /// continuing reproduces an uninterrupted run exactly.
  std::string save_state() const;
  static SequentialMonitor load_state(MonitorConfig config, std::string_view state);

 private:
  void validate_observation(const Observation& obs) const;
  Checkpoint checkpoint(bool partial);

  MonitorConfig config_;
  ArmData treatment_;
  ArmData control_;
  MsprtState msprt_;
  std::optional<Vector> warm_start_;
  std::optional<ScoreSnapshot> last_snapshot_;
  SstTrace trace_;
  std::int64_t events_ = 0;
  int pending_ = 0;
  bool finished_ = false;
};

/// Runs an in-memory stream through a monitor, flushing a final partial
/// batch. An empty stream gives an empty trace.
SstTrace run_monitor(std::span<const Observation> stream, const MonitorConfig& config);
SstTrace run_sst(std::span<const Observation> stream, MonitorConfig config);
SstTrace run_msprt(std::span<const Observation> stream, MonitorConfig config);

}  // namespace seqscore
