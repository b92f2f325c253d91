#pragma once

#include <cstdint>
#include <optional>

#include "seqscore/glm_family.hpp"
#include "seqscore/score.hpp"

namespace seqscore {

/// Streaming count, mean and centered sum of squares (Welford).
struct ArmMoments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double y);
  /// Unbiased sample variance; 0 for n < 2.
  double sample_variance() const;
};

/// Two-sample mSPRT on the difference in arm means (ATE model), ignoring
/// covariates. Normal responses use the known dispersion as the per-
/// observation variance unless `plugin_variance` is set; Bernoulli responses
/// always use the plug-in p(1-p).
struct MsprtState {
  FamilySpec family;
  double tau = 1.0;
  bool plugin_variance = false;
  ArmMoments treatment;
  ArmMoments control;

  void add(Arm arm, double y);
};

struct MsprtEvaluation {
  std::optional<double> log_lambda;
  DeferReason reason = DeferReason::none;
};

/// log of sqrt(V/(V+tau^2)) * exp(tau^2 delta^2 / (2 V (V + tau^2))).
double msprt_log_statistic(double delta, double variance, double tau);

/// Defers with insufficient_samples below two observations per arm and with
/// zero_variance when the estimated variance of the difference is not
/// positive. Poisson responses are rejected with ConfigError.
MsprtEvaluation msprt_statistic(const MsprtState& state);

}  // namespace seqscore
