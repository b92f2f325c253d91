#include <benchmark/benchmark.h>

#include <random>

#include "seqscore/monitor.hpp"
#include "seqscore/multiple_testing.hpp"
#include "seqscore/nuisance.hpp"
#include "seqscore/score.hpp"
#include "seqscore/simulation.hpp"
#include "seqscore/sst.hpp"

namespace {

using namespace seqscore;

ExperimentConfig logistic_config(std::int64_t rows_per_arm) {
  ExperimentConfig c;
  c.family = make_family(FamilyKind::bernoulli_logit);
  c.theta0 = (Vector(2) << 0.0, 1.0).finished();
  c.batch = static_cast<int>(2 * rows_per_arm);
  c.validate();
  return c;
}

void BM_FitControlMle(benchmark::State& state) {
  const ExperimentConfig cfg = logistic_config(state.range(0));
  auto rng = replication_rng(1, 0);
  const ArmBatch b = generate_arm_batch(cfg, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_control_mle(cfg.family, b.control_x, b.control_y));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitControlMle)->Arg(1000)->Arg(5000)->Arg(10000);

void BM_Snapshot(benchmark::State& state) {
  const ExperimentConfig cfg = logistic_config(state.range(0));
  auto rng = replication_rng(2, 0);
  const ArmBatch b = generate_arm_batch(cfg, rng);
  const ArmData t = ArmData::from(Arm::treatment, b.treatment_x, b.treatment_y);
  const ArmData c = ArmData::from(Arm::control, b.control_x, b.control_y);
  const Vector beta0 = Vector::Zero(2);
  const std::optional<Vector> warm = fit_control_mle(cfg.family, b.control_x, b.control_y).theta_hat;
  for (auto _ : state) {
    benchmark::DoNotOptimize(snapshot(cfg.family, t, c, beta0, warm));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Snapshot)->Arg(1000)->Arg(5000)->Arg(10000);

void BM_LogMixtureStatistic(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  ScoreSnapshot snap;
  snap.n1 = 5000;
  snap.n0 = 5000;
  const Matrix b = Matrix::NullaryExpr(d, d, [&] { return gauss(rng); });
  snap.info1 = b * b.transpose() / static_cast<double>(d) + Matrix::Identity(d, d);
  snap.info0 = snap.info1;
  snap.v_n = composite_v(snap.info1, snap.info0);
  snap.s_bar = Vector::NullaryExpr(d, [&] { return 0.01 * gauss(rng); });
  const PriorSpec prior{Vector::Zero(d), 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_mixture_statistic(snap, prior));
  }
}
BENCHMARK(BM_LogMixtureStatistic)->Arg(2)->Arg(3)->Arg(21);

void BM_MonitorStream(benchmark::State& state) {
  MonitorConfig mc;
  mc.family = make_family(FamilyKind::bernoulli_logit);
  mc.p = 1;
  mc.stop_on_reject = false;
  mc.cap_n = 1'000'000;
  mc.validate();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> xs(n);
  std::vector<Observation> stream(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = gauss(rng);
    stream[i].arm = i % 2 ? Arm::treatment : Arm::control;
    stream[i].response = sample_response(mc.family, xs[i], rng);
    stream[i].covariates = std::span<const double>(&xs[i], 1);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_monitor(stream, mc));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonitorStream)->Arg(4000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_BhCorrelated(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif;
  ComparisonBatch batch;
  batch.p_values.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& p : batch.p_values) p = unif(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bh_correlated(batch));
  }
}
BENCHMARK(BM_BhCorrelated)->Arg(64)->Arg(4096);

}  // namespace
BENCHMARK_MAIN();
