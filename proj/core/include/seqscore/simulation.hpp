#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "seqscore/glm_family.hpp"
#include "seqscore/linalg.hpp"
#include "seqscore/monitor.hpp"

namespace seqscore {

/// Covariate distributions for synthetic experiments. Every scheme fixes
/// its dimension p; generated rows carry a leading intercept 1.
enum class CovariateScheme {
  std_normal,             // N(0,1)
  uniform_pm1,            // U[-1,1]
  bernoulli_half,         // Ber(0.5)
  mvn_corr,               // MVN((0,0), [[1,.5],[.5,1]])
  hybrid_normal_uniform,  // N(0,1) and U[-1,1], independent
  highdim20,              // 7 normal, 8 uniform, 5 Bernoulli columns
};

CovariateScheme parse_scheme(std::string_view name);
std::string_view to_string(CovariateScheme scheme);
int scheme_dimension(CovariateScheme scheme);

/// Column layout of the 20-covariate scheme: evenly spaced grids over the
/// stated ranges.
struct HighDimLayout {
  std::vector<double> normal_means;     // 7 values in [-0.3, 0.3], variance 1
  std::vector<double> uniform_limits;   // 8 values in [0.3, 1], U[-u, u]
  std::vector<double> bernoulli_probs;  // 5 values in [0.1, 0.5]
};

const HighDimLayout& highdim_layout();

/// n x (p+1) design with first column ones.
RowMatrix generate_covariates(CovariateScheme scheme, Eigen::Index n, std::mt19937_64& rng);

/// Generator and test configuration for one simulated experiment.
struct ExperimentConfig {
  FamilySpec family;
  CovariateScheme scheme = CovariateScheme::std_normal;
  Vector theta0;
  Vector beta_true;
  Vector beta0;
  double alpha = 0.05;
  double tau = 1.0;
  int batch = 200;
  std::int64_t cap_n = 10000;
  int replications = 100;
  std::uint64_t seed = 1;
  Method method = Method::sst;
  bool msprt_plugin_variance = false;
  /// Worker threads for replications; 0 = hardware concurrency.
  unsigned threads = 0;

  /// Fills zero defaults for empty effect vectors and throws ConfigError on
  /// inconsistent dimensions or an odd batch size.
  void validate();
  MonitorConfig monitor_config() const;
  std::string label() const;
};

/// Per-arm share of one generated batch.
struct ArmBatch {
  RowMatrix treatment_x;
  Vector treatment_y;
  RowMatrix control_x;
  Vector control_y;
};

/// batch/2 rows per arm; control responses use eta = theta0'x, treatment
/// responses eta = (theta0 + beta_true)'x.
ArmBatch generate_arm_batch(const ExperimentConfig& config, std::mt19937_64& rng);

/// Independent generator for (seed, replication, stream).
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream = 0);

struct ReplicationOutcome {
  bool rejected = false;
  std::int64_t stop_n1 = 0;
  std::int64_t stop_n0 = 0;
  double final_p = 1.0;
  std::int64_t deferred_checkpoints = 0;
  std::int64_t checkpoints = 0;
};

/// Runs one experiment with the generator from replication_rng(seed, r,
/// stream) until rejection (if `stop_on_reject`) or the sample cap.
ReplicationOutcome run_replication(const ExperimentConfig& config, std::uint64_t replication,
                                   std::uint64_t stream = 0, bool stop_on_reject = true,
                                   SstTrace* trace_out = nullptr);

struct MultipleMetrics {
  int m = 0;
  int alternatives = 0;
  double fdr = 0.0;
  double fdr_se = 0.0;
  /// Empty when no comparison carries a true effect.
  std::optional<double> tpr;
  std::optional<double> tpr_se;
};

struct MetricsReport {
  std::string label;
  std::string method;
  int replications = 0;
  std::int64_t rejections = 0;
  double rejection_rate = 0.0;
  /// sqrt(r (1 - r) / replications).
  double rejection_se = 0.0;
  /// Mean per-arm count at rejection over rejecting runs.
  std::optional<double> mean_stop_n;
  std::int64_t deferred_checkpoints = 0;
  std::optional<MultipleMetrics> multiple;
};

/// Rejection rate (type I error when beta_true == beta0, power otherwise)
/// and mean stopping time over `replications` independent runs.
MetricsReport estimate_operating_characteristics(ExperimentConfig config);

struct MultipleStudyConfig {
  ExperimentConfig base;
  int m = 64;
  /// True alternatives cycle through these effect sizes B, each placed at
  /// (-B, B, -B, ...).
  std::vector<double> effects{0.1, 0.2, 0.3, 0.4};

  void validate();
};

/// Effect vector (-B, B, -B, ...) of the given length.
Vector alternating_effect(double magnitude, Eigen::Index length);

/// Per replication: 3m/4 null and m/4 alternative comparisons are each run
/// to the sample cap; their final p-values go through bh_correlated, and
/// FDR/TPR are averaged over replications.
MetricsReport run_multiple_testing_study(MultipleStudyConfig config);

std::string to_table(const MetricsReport& report);
std::string to_record(const MetricsReport& report);

}  // namespace seqscore
