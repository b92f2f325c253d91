#include "seqscore/msprt.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "seqscore/errors.hpp"

namespace seqscore {
namespace {

/// Composite Simpson integral of the normal likelihood ratio of delta
/// against the N(0, tau^2) mixing density, over a window around delta.
double mixture_by_simpson(double delta, double variance, double tau) {
  const double sd = std::sqrt(variance);
  const double lo = delta - 30.0 * sd, hi = delta + 30.0 * sd;
  const int intervals = 200000;
  const double h = (hi - lo) / intervals;
  auto f = [&](double theta) {
    const double ratio = std::exp((theta * delta - 0.5 * theta * theta) / variance);
    const double prior = std::exp(-0.5 * theta * theta / (tau * tau)) / (tau * std::sqrt(2.0 * std::numbers::pi));
    return ratio * prior;
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

TEST(MsprtStatistic, MatchesNumericalIntegration) {
  const double closed = std::exp(msprt_log_statistic(0.3, 0.01, 1.0));
  const double numeric = mixture_by_simpson(0.3, 0.01, 1.0);
  EXPECT_NEAR(closed / numeric, 1.0, 1e-8);
  for (double delta : {-0.2, 0.0, 0.05, 0.4}) {
    for (double tau : {0.1, 0.5, 2.0}) {
      EXPECT_NEAR(std::exp(msprt_log_statistic(delta, 0.02, tau)) / mixture_by_simpson(delta, 0.02, tau), 1.0, 1e-8);
    }
  }
}

TEST(MsprtStatistic, PointPriorGivesOne) {
  EXPECT_EQ(msprt_log_statistic(0.7, 0.01, 0.0), 0.0);
}

TEST(MsprtStatistic, ZeroDifferenceLeavesShrinkageFactor) {
  const double v = 0.04, tau = 0.5;
  const double got = std::exp(msprt_log_statistic(0.0, v, tau));
  EXPECT_NEAR(got, std::sqrt(v / (v + tau * tau)), 1e-15);
  EXPECT_LT(got, 1.0);
}

TEST(MsprtStatistic, NormalUsesDispersionByDefault) {
  MsprtState state{make_family(FamilyKind::normal_identity, 2.0), 1.0};
  for (double y : {1.0, 3.0, 2.0}) state.add(Arm::treatment, y);
  for (double y : {0.0, 1.0}) state.add(Arm::control, y);
  const MsprtEvaluation e = msprt_statistic(state);
  ASSERT_TRUE(e.log_lambda.has_value());
  EXPECT_NEAR(*e.log_lambda, msprt_log_statistic(2.0 - 0.5, 2.0 * (1.0 / 3 + 1.0 / 2), 1.0), 1e-14);

  state.plugin_variance = true;
  const MsprtEvaluation p = msprt_statistic(state);
  EXPECT_NEAR(*p.log_lambda, msprt_log_statistic(1.5, 1.0 / 3 + 0.5 / 2, 1.0), 1e-14);
}

TEST(MsprtStatistic, BernoulliPlugInVariance) {
  MsprtState state{make_family(FamilyKind::bernoulli_logit), 0.5};
  for (double y : {1.0, 1.0, 0.0, 1.0}) state.add(Arm::treatment, y);
  for (double y : {0.0, 1.0, 0.0, 0.0}) state.add(Arm::control, y);
  const double v = 0.75 * 0.25 / 4 + 0.25 * 0.75 / 4;
  EXPECT_NEAR(*msprt_statistic(state).log_lambda, msprt_log_statistic(0.5, v, 0.5), 1e-14);
}

TEST(MsprtStatistic, DefersOnTooFewOrDegenerateObservations) {
  MsprtState state{make_family(FamilyKind::bernoulli_logit), 1.0};
  state.add(Arm::treatment, 1.0);
  state.add(Arm::control, 0.0);
  EXPECT_EQ(msprt_statistic(state).reason, DeferReason::insufficient_samples);
  state.add(Arm::treatment, 1.0);
  state.add(Arm::control, 0.0);
  const MsprtEvaluation e = msprt_statistic(state);
  EXPECT_FALSE(e.log_lambda.has_value());
  EXPECT_EQ(e.reason, DeferReason::zero_variance);
}

TEST(MsprtStatistic, PoissonIsNotSupported) {
  MsprtState state{FamilySpec{FamilyKind::poisson_log, 1.0}, 1.0};
  for (int i = 0; i < 3; ++i) {
    state.add(Arm::treatment, i);
    state.add(Arm::control, i);
  }
  EXPECT_THROW(msprt_statistic(state), ConfigError);
}

TEST(ArmMoments, WelfordMatchesTwoPass) {
  ArmMoments m;
  const double ys[] = {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  for (double y : ys) m.add(y);
  EXPECT_DOUBLE_EQ(m.mean, 5.0);
  EXPECT_NEAR(m.sample_variance(), 32.0 / 7.0, 1e-14);
}

}  // namespace
}  // namespace seqscore
