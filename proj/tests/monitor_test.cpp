#include "seqscore/monitor.hpp"

#include <gtest/gtest.h>

#include <random>

#include "seqscore/errors.hpp"

namespace seqscore {
namespace {

/// Owns covariate storage for a synthetic observation stream.
struct Stream {
  std::vector<std::vector<double>> covariates;
  std::vector<Observation> obs;
};

Stream make_stream(const FamilySpec& family, int events, double effect, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::bernoulli_distribution coin(0.5);
  Stream s;
  s.covariates.reserve(static_cast<std::size_t>(events));
  for (int i = 0; i < events; ++i) {
    const double x = gauss(rng);
    const Arm arm = coin(rng) ? Arm::treatment : Arm::control;
    const double eta = x + (arm == Arm::treatment ? effect * x - effect : 0.0);
    s.covariates.push_back({x});
    s.obs.push_back({sample_response(family, eta, rng), arm, {}});
  }
  for (std::size_t i = 0; i < s.obs.size(); ++i) s.obs[i].covariates = s.covariates[i];
  return s;
}

MonitorConfig logistic_config(int batch = 100) {
  MonitorConfig c;
  c.family = make_family(FamilyKind::bernoulli_logit);
  c.p = 1;
  c.batch = batch;
  c.cap_n = 100000;
  c.validate();
  return c;
}

TEST(RunSst, EmptyStreamGivesEmptyTrace) {
  const SstTrace t = run_sst({}, logistic_config());
  EXPECT_TRUE(t.empty());
  EXPECT_FALSE(t.decision.has_value());
  EXPECT_EQ(t.p_value(), 1.0);
  MonitorConfig normal = logistic_config();
  normal.family = make_family(FamilyKind::normal_identity);
  EXPECT_TRUE(run_msprt({}, normal).empty());
}

TEST(RunSst, CheckpointsEveryBatchWithFlaggedPartialTail) {
  const Stream s = make_stream(make_family(FamilyKind::bernoulli_logit), 1050, 0.0, 1);
  MonitorConfig c = logistic_config(100);
  c.stop_on_reject = false;
  const SstTrace t = run_sst(s.obs, c);
  ASSERT_EQ(t.checkpoints.size(), 11u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(t.checkpoints[i].n1 + t.checkpoints[i].n0, static_cast<std::int64_t>(100 * (i + 1)));
    EXPECT_FALSE(t.checkpoints[i].partial);
  }
  EXPECT_TRUE(t.checkpoints.back().partial);
  EXPECT_EQ(t.checkpoints.back().n1 + t.checkpoints.back().n0, 1050);
}

TEST(RunSst, EarlyCheckpointsDeferUntilSampleGate) {
  const Stream s = make_stream(make_family(FamilyKind::bernoulli_logit), 100, 0.0, 2);
  MonitorConfig c = logistic_config(4);
  const SstTrace t = run_sst(s.obs, c);
  ASSERT_FALSE(t.checkpoints.empty());
  EXPECT_TRUE(t.checkpoints.front().deferred);
  EXPECT_EQ(t.checkpoints.front().reason, DeferReason::insufficient_samples);
  EXPECT_FALSE(t.checkpoints.back().deferred);
}

TEST(RunSst, StrongHeterogeneousEffectStopsEarly) {
  const Stream s = make_stream(make_family(FamilyKind::bernoulli_logit), 20000, 0.8, 3);
  const SstTrace t = run_sst(s.obs, logistic_config(200));
  ASSERT_TRUE(t.decision.has_value());
  EXPECT_LT(t.decision->n1 + t.decision->n0, 20000);
  EXPECT_EQ(t.decision->stop_index + 1, t.checkpoints.size());
  EXPECT_LE(t.p_value(), 0.05);
}

TEST(SequentialMonitor, IgnoresInputAfterDecision) {
  const Stream s = make_stream(make_family(FamilyKind::bernoulli_logit), 20000, 0.8, 4);
  SequentialMonitor m(logistic_config(200));
  for (const auto& o : s.obs) m.observe(o);
  ASSERT_TRUE(m.finished());
  const std::int64_t events = m.events();
  EXPECT_FALSE(m.observe(s.obs.front()).has_value());
  EXPECT_EQ(m.events(), events);
}

TEST(SequentialMonitor, StopsAtSampleCap) {
  const Stream s = make_stream(make_family(FamilyKind::bernoulli_logit), 5000, 0.0, 5);
  MonitorConfig c = logistic_config(100);
  c.cap_n = 1000;
  const SstTrace t = run_sst(s.obs, c);
  ASSERT_FALSE(t.empty());
  EXPECT_GE(std::min(t.checkpoints.back().n1, t.checkpoints.back().n0), 1000);
  EXPECT_LT(std::min(t.checkpoints[t.checkpoints.size() - 2].n1, t.checkpoints[t.checkpoints.size() - 2].n0), 1000);
}

TEST(SequentialMonitor, MalformedObservationsReportTheirIndex) {
  SequentialMonitor m(logistic_config());
  const std::vector<double> one{0.5};
  const std::vector<double> two{0.5, 1.0};
  m.observe({1.0, Arm::treatment, one});
  try {
    m.observe({1.0, Arm::control, two});
    FAIL() << "expected MalformedRecord";
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.position(), 1u);
  }
  EXPECT_THROW(m.observe({0.5, Arm::control, one}), MalformedRecord);
  const std::vector<double> bad{NAN};
  EXPECT_THROW(m.observe({1.0, Arm::control, bad}), MalformedRecord);
  EXPECT_EQ(m.events(), 1);
}

TEST(SequentialMonitor, SaveAndLoadContinuesIdentically) {
  const Stream s = make_stream(make_family(FamilyKind::bernoulli_logit), 3000, 0.1, 6);
  MonitorConfig c = logistic_config(100);
  c.stop_on_reject = false;
  const SstTrace full = run_sst(s.obs, c);

  for (std::size_t cut : {0u, 1u, 99u, 100u, 1234u, 2999u}) {
    SequentialMonitor first(c);
    for (std::size_t i = 0; i < cut; ++i) first.observe(s.obs[i]);
    SequentialMonitor resumed = SequentialMonitor::load_state(c, first.save_state());
    for (std::size_t i = cut; i < s.obs.size(); ++i) resumed.observe(s.obs[i]);
    resumed.flush();
    ASSERT_EQ(resumed.trace().checkpoints.size(), full.checkpoints.size()) << "cut " << cut;
    for (std::size_t i = 0; i < full.checkpoints.size(); ++i) {
      EXPECT_EQ(to_record(resumed.trace().checkpoints[i]), to_record(full.checkpoints[i])) << "cut " << cut;
    }
  }
}

TEST(SequentialMonitor, LoadRejectsGarbage) {
  EXPECT_THROW(SequentialMonitor::load_state(logistic_config(), "{not json"), StateError);
  EXPECT_THROW(SequentialMonitor::load_state(logistic_config(), "{}"), StateError);
}

TEST(RunMsprt, ComparesArmMeans) {
  const Stream s = make_stream(make_family(FamilyKind::normal_identity), 4000, 0.0, 7);
  MonitorConfig c = logistic_config(200);
  c.family = make_family(FamilyKind::normal_identity);
  c.method = Method::msprt;
  c.stop_on_reject = false;
  const SstTrace t = run_msprt(s.obs, c);
  ASSERT_EQ(t.checkpoints.size(), 20u);
  for (std::size_t i = 1; i < t.checkpoints.size(); ++i) {
    EXPECT_LE(t.checkpoints[i].p_value, t.checkpoints[i - 1].p_value);
  }
}

TEST(MonitorConfig, Validation) {
  MonitorConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MonitorConfig{};
  c.tau = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MonitorConfig{};
  c.batch = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = MonitorConfig{};
  c.beta0 = Vector::Zero(5);
  EXPECT_THROW(c.validate(), ConfigError);
  c = MonitorConfig{};
  c.family = FamilySpec{FamilyKind::poisson_log, 1.0};
  c.method = Method::msprt;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_method("msprt"), Method::msprt);
  EXPECT_THROW(parse_method("bayes"), ConfigError);
}

TEST(MonitorConfig, CanonicalFormDistinguishesSettings) {
  MonitorConfig a = logistic_config();
  MonitorConfig b = a;
  b.tau = 0.5;
  EXPECT_EQ(a.canonical(), logistic_config().canonical());
  EXPECT_NE(a.canonical(), b.canonical());
}

}  // namespace
}  // namespace seqscore
