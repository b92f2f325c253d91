#include "seqscore/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "seqscore/errors.hpp"

namespace seqscore {
namespace {

Vector column_mean(const RowMatrix& x) { return x.colwise().mean().transpose(); }

Matrix column_cov(const RowMatrix& x) {
  const RowMatrix centered = x.rowwise() - x.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

TEST(GenerateCovariates, SchemeMomentsByLawOfLargeNumbers) {
  std::mt19937_64 rng(1);
  const Eigen::Index n = 200000;
  const double tol = 4.0 / std::sqrt(static_cast<double>(n));

  const RowMatrix normal = generate_covariates(CovariateScheme::std_normal, n, rng);
  EXPECT_TRUE((normal.col(0).array() == 1.0).all());
  EXPECT_NEAR(column_mean(normal)(1), 0.0, tol);
  EXPECT_NEAR(column_cov(normal)(1, 1), 1.0, 4 * tol);

  const RowMatrix uniform = generate_covariates(CovariateScheme::uniform_pm1, n, rng);
  EXPECT_NEAR(column_cov(uniform)(1, 1), 1.0 / 3.0, 2 * tol);
  EXPECT_LE(uniform.col(1).cwiseAbs().maxCoeff(), 1.0);

  const RowMatrix coin = generate_covariates(CovariateScheme::bernoulli_half, n, rng);
  EXPECT_NEAR(column_mean(coin)(1), 0.5, tol);

  const RowMatrix mvn = generate_covariates(CovariateScheme::mvn_corr, n, rng);
  const Matrix cov = column_cov(mvn);
  EXPECT_NEAR(cov(1, 2), 0.5, 4 * tol);
  EXPECT_NEAR(cov(2, 2), 1.0, 4 * tol);

  const RowMatrix hybrid = generate_covariates(CovariateScheme::hybrid_normal_uniform, n, rng);
  EXPECT_NEAR(column_cov(hybrid)(1, 2), 0.0, 2 * tol);
}

TEST(GenerateCovariates, HighDimensionalLayout) {
  const HighDimLayout& layout = highdim_layout();
  ASSERT_EQ(layout.normal_means.size(), 7u);
  ASSERT_EQ(layout.uniform_limits.size(), 8u);
  ASSERT_EQ(layout.bernoulli_probs.size(), 5u);
  EXPECT_DOUBLE_EQ(layout.normal_means.front(), -0.3);
  EXPECT_DOUBLE_EQ(layout.normal_means.back(), 0.3);
  EXPECT_DOUBLE_EQ(layout.uniform_limits.front(), 0.3);
  EXPECT_DOUBLE_EQ(layout.uniform_limits.back(), 1.0);
  EXPECT_DOUBLE_EQ(layout.bernoulli_probs.back(), 0.5);

  std::mt19937_64 rng(2);
  const RowMatrix x = generate_covariates(CovariateScheme::highdim20, 100000, rng);
  ASSERT_EQ(x.cols(), 21);
  const Vector mean = column_mean(x);
  for (int j = 0; j < 7; ++j) EXPECT_NEAR(mean(1 + j), layout.normal_means[j], 0.02);
  for (int j = 0; j < 8; ++j) {
    EXPECT_LE(x.col(8 + j).cwiseAbs().maxCoeff(), layout.uniform_limits[j]);
    EXPECT_NEAR(column_cov(x)(8 + j, 8 + j), layout.uniform_limits[j] * layout.uniform_limits[j] / 3.0, 0.01);
  }
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(mean(16 + j), layout.bernoulli_probs[j], 0.01);
}

ExperimentConfig logistic_experiment() {
  ExperimentConfig c;
  c.family = make_family(FamilyKind::bernoulli_logit);
  c.theta0 = (Vector(2) << 0, 1).finished();
  c.batch = 200;
  c.cap_n = 2000;
  c.replications = 12;
  c.seed = 42;
  c.validate();
  return c;
}

TEST(GenerateArmBatch, DeterministicForFixedSeed) {
  const ExperimentConfig c = logistic_experiment();
  auto a = replication_rng(9, 3);
  auto b = replication_rng(9, 3);
  const ArmBatch x = generate_arm_batch(c, a);
  const ArmBatch y = generate_arm_batch(c, b);
  EXPECT_EQ(x.treatment_x, y.treatment_x);
  EXPECT_EQ(x.control_y, y.control_y);
  EXPECT_EQ(x.treatment_y.size(), 100);
  EXPECT_EQ(x.control_x.rows(), 100);
}

TEST(GenerateArmBatch, NullArmsShareTheConditionalLaw) {
  ExperimentConfig c = logistic_experiment();
  c.batch = 400000;
  auto rng = replication_rng(1, 0);
  const ArmBatch b = generate_arm_batch(c, rng);
  // Compare P(Y=1 | x > 0) between arms with a two-sample z statistic.
  auto rate = [](const RowMatrix& x, const Vector& y) {
    double hits = 0.0, count = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (x(i, 1) > 0) {
        hits += y(i);
        count += 1.0;
      }
    }
    return std::pair{hits / count, count};
  };
  const auto [p1, n1] = rate(b.treatment_x, b.treatment_y);
  const auto [p0, n0] = rate(b.control_x, b.control_y);
  const double se = std::sqrt(p1 * (1 - p1) / n1 + p0 * (1 - p0) / n0);
  EXPECT_LT(std::abs(p1 - p0) / se, 4.0);
}

TEST(GenerateArmBatch, TreatmentEffectShiftsResponses) {
  ExperimentConfig c = logistic_experiment();
  c.family = make_family(FamilyKind::normal_identity);
  c.beta_true = (Vector(2) << 0.5, 0.0).finished();
  c.batch = 200000;
  auto rng = replication_rng(2, 0);
  const ArmBatch b = generate_arm_batch(c, rng);
  EXPECT_NEAR(b.treatment_y.mean() - b.control_y.mean(), 0.5, 0.03);
}

TEST(ReplicationRng, DistinctStreams) {
  auto a = replication_rng(1, 0, 0);
  auto b = replication_rng(1, 1, 0);
  auto c = replication_rng(1, 0, 1);
  auto d = replication_rng(2, 0, 0);
  const auto va = a();
  EXPECT_NE(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
}

TEST(EstimateOperatingCharacteristics, ReproducibleAndThreadIndependent) {
  ExperimentConfig c = logistic_experiment();
  c.beta_true = (Vector(2) << -0.3, 0.3).finished();
  c.threads = 1;
  const std::string one = to_record(estimate_operating_characteristics(c));
  c.threads = 3;
  const std::string three = to_record(estimate_operating_characteristics(c));
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, to_record(estimate_operating_characteristics(c)));
}

TEST(EstimateOperatingCharacteristics, StrongEffectIsDetected) {
  ExperimentConfig c = logistic_experiment();
  c.beta_true = (Vector(2) << -0.5, 0.5).finished();
  const MetricsReport r = estimate_operating_characteristics(c);
  EXPECT_EQ(r.replications, 12);
  EXPECT_GE(r.rejection_rate, 0.9);
  ASSERT_TRUE(r.mean_stop_n.has_value());
  EXPECT_LE(*r.mean_stop_n, 2000.0);
  EXPECT_NE(to_table(r).find("rejection rate"), std::string::npos);
}

TEST(EstimateOperatingCharacteristics, NullRarelyRejects) {
  ExperimentConfig c = logistic_experiment();
  c.replications = 40;
  const MetricsReport r = estimate_operating_characteristics(c);
  EXPECT_LE(r.rejections, 4);
}

TEST(EstimateOperatingCharacteristics, HighDimensionalNullAndPower) {
  ExperimentConfig c;
  c.family = make_family(FamilyKind::bernoulli_logit);
  c.scheme = CovariateScheme::highdim20;
  c.theta0 = Vector::Zero(21);
  c.theta0(1) = 1.0;
  c.theta0(2) = -1.0;
  c.cap_n = 3000;
  c.replications = 8;
  c.seed = 5;
  c.validate();
  EXPECT_LE(estimate_operating_characteristics(c).rejections, 1);

  c.beta_true = Vector::Zero(21);
  c.beta_true.segment(1, 3).setConstant(0.45);
  EXPECT_GE(estimate_operating_characteristics(c).rejection_rate, 0.85);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c = logistic_experiment();
  c.batch = 201;
  EXPECT_THROW(c.validate(), ConfigError);
  c = logistic_experiment();
  c.theta0 = Vector::Zero(3);
  EXPECT_THROW(c.validate(), ConfigError);
  c = logistic_experiment();
  c.replications = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_scheme("uniform"), CovariateScheme::uniform_pm1);
  EXPECT_THROW(parse_scheme("cauchy"), ConfigError);
}

TEST(AlternatingEffect, Pattern) {
  const Vector v = alternating_effect(0.2, 3);
  EXPECT_EQ(v, (Vector(3) << -0.2, 0.2, -0.2).finished());
}

TEST(MultipleStudy, NoAlternativesLeavesTprUndefined) {
  MultipleStudyConfig s;
  s.base = logistic_experiment();
  s.base.cap_n = 600;
  s.base.replications = 3;
  s.m = 8;
  s.effects = {0.0};
  const MetricsReport r = run_multiple_testing_study(s);
  ASSERT_TRUE(r.multiple.has_value());
  EXPECT_EQ(r.multiple->alternatives, 0);
  EXPECT_FALSE(r.multiple->tpr.has_value());
  EXPECT_LE(r.multiple->fdr, 0.05);
  EXPECT_NE(to_table(r).find("TPR             n/a"), std::string::npos);
  EXPECT_NE(to_record(r).find("\"tpr\":null"), std::string::npos);
}

TEST(MultipleStudy, LargeEffectsAreFound) {
  MultipleStudyConfig s;
  s.base = logistic_experiment();
  s.base.cap_n = 1000;
  s.base.replications = 3;
  s.m = 8;
  s.effects = {0.8};
  const MetricsReport r = run_multiple_testing_study(s);
  EXPECT_EQ(r.multiple->alternatives, 2);
  EXPECT_DOUBLE_EQ(*r.multiple->tpr, 1.0);
  EXPECT_EQ(to_record(r), to_record(run_multiple_testing_study(s)));
}

TEST(MultipleStudy, Validation) {
  MultipleStudyConfig s;
  s.base = logistic_experiment();
  s.m = 6;
  EXPECT_THROW(s.validate(), ConfigError);
  s.m = 8;
  s.effects.clear();
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace seqscore
