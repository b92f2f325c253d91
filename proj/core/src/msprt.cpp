#include "seqscore/msprt.hpp"

#include <cmath>

#include "seqscore/errors.hpp"

namespace seqscore {

void ArmMoments::add(double y) {
  ++n;
  const double d = y - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (y - mean);
}

double ArmMoments::sample_variance() const {
  return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1);
}

void MsprtState::add(Arm arm, double y) {
  (arm == Arm::treatment ? treatment : control).add(y);
}

double msprt_log_statistic(double delta, double variance, double tau) {
  if (tau == 0.0) return 0.0;
  const double tau2 = tau * tau;
  return 0.5 * std::log(variance / (variance + tau2)) +
         tau2 * delta * delta / (2.0 * variance * (variance + tau2));
}

MsprtEvaluation msprt_statistic(const MsprtState& state) {
  MsprtEvaluation out;
  if (state.treatment.n < 2 || state.control.n < 2) {
    out.reason = DeferReason::insufficient_samples;
    return out;
  }
  const double n1 = static_cast<double>(state.treatment.n);
  const double n0 = static_cast<double>(state.control.n);
  double variance = 0.0;
  switch (state.family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double p1 = state.treatment.mean;
      const double p0 = state.control.mean;
      variance = p1 * (1.0 - p1) / n1 + p0 * (1.0 - p0) / n0;
      break;
    }
    case FamilyKind::normal_identity:
      variance = state.plugin_variance
                     ? state.treatment.sample_variance() / n1 + state.control.sample_variance() / n0
                     : state.family.dispersion * (1.0 / n1 + 1.0 / n0);
      break;
    case FamilyKind::poisson_log:
      throw ConfigError("mSPRT baseline supports normal and bernoulli responses only");
  }
  if (!(variance > 0.0)) {
    out.reason = DeferReason::zero_variance;
    return out;
  }
  out.log_lambda = msprt_log_statistic(state.treatment.mean - state.control.mean, variance, state.tau);
  return out;
}

}  // namespace seqscore
