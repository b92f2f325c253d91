#include "seqscore/simulation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "seqscore/errors.hpp"
#include "seqscore/multiple_testing.hpp"
#include "seqscore/parallel.hpp"

namespace seqscore {

CovariateScheme parse_scheme(std::string_view name) {
  if (name == "std_normal" || name == "normal") return CovariateScheme::std_normal;
  if (name == "uniform_pm1" || name == "uniform") return CovariateScheme::uniform_pm1;
  if (name == "bernoulli_half" || name == "bernoulli") return CovariateScheme::bernoulli_half;
  if (name == "mvn_corr" || name == "mvn") return CovariateScheme::mvn_corr;
  if (name == "hybrid_normal_uniform" || name == "hybrid") return CovariateScheme::hybrid_normal_uniform;
  if (name == "highdim20") return CovariateScheme::highdim20;
  throw ConfigError("unknown covariate scheme '" + std::string(name) + "'");
}

std::string_view to_string(CovariateScheme scheme) {
  switch (scheme) {
    case CovariateScheme::std_normal: return "std_normal";
    case CovariateScheme::uniform_pm1: return "uniform_pm1";
    case CovariateScheme::bernoulli_half: return "bernoulli_half";
    case CovariateScheme::mvn_corr: return "mvn_corr";
    case CovariateScheme::hybrid_normal_uniform: return "hybrid_normal_uniform";
    case CovariateScheme::highdim20: return "highdim20";
  }
  return "unknown";
}

int scheme_dimension(CovariateScheme scheme) {
  switch (scheme) {
    case CovariateScheme::std_normal:
    case CovariateScheme::uniform_pm1:
    case CovariateScheme::bernoulli_half:
      return 1;
    case CovariateScheme::mvn_corr:
    case CovariateScheme::hybrid_normal_uniform:
      return 2;
    case CovariateScheme::highdim20:
      return 20;
  }
  return 1;
}

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  return out;
}

const Matrix& mvn_factor() {
  static const Matrix lower = [] {
    Matrix cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    return Matrix(Eigen::LLT<Matrix>(cov).matrixL());
  }();
  return lower;
}

}  // namespace

const HighDimLayout& highdim_layout() {
  static const HighDimLayout layout{linspace(-0.3, 0.3, 7), linspace(0.3, 1.0, 8), linspace(0.1, 0.5, 5)};
  return layout;
}

RowMatrix generate_covariates(CovariateScheme scheme, Eigen::Index n, std::mt19937_64& rng) {
  const int p = scheme_dimension(scheme);
  RowMatrix x(n, p + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    switch (scheme) {
      case CovariateScheme::std_normal:
        x(i, 1) = normal(rng);
        break;
      case CovariateScheme::uniform_pm1:
        x(i, 1) = uniform(rng);
        break;
      case CovariateScheme::bernoulli_half:
        x(i, 1) = coin(rng) ? 1.0 : 0.0;
        break;
      case CovariateScheme::mvn_corr: {
        Eigen::Vector2d z(normal(rng), normal(rng));
        const Eigen::Vector2d v = mvn_factor() * z;
        x(i, 1) = v(0);
        x(i, 2) = v(1);
        break;
      }
      case CovariateScheme::hybrid_normal_uniform:
        x(i, 1) = normal(rng);
        x(i, 2) = uniform(rng);
        break;
      case CovariateScheme::highdim20: {
        const auto& layout = highdim_layout();
        Eigen::Index c = 1;
        for (double mean : layout.normal_means) x(i, c++) = mean + normal(rng);
        for (double limit : layout.uniform_limits) x(i, c++) = limit * uniform(rng);
        for (double prob : layout.bernoulli_probs) x(i, c++) = std::bernoulli_distribution(prob)(rng) ? 1.0 : 0.0;
        break;
      }
    }
  }
  return x;
}

void ExperimentConfig::validate() {
  family.validate();
  const Eigen::Index k = scheme_dimension(scheme) + 1;
  if (theta0.size() == 0) theta0 = Vector::Zero(k);
  if (beta_true.size() == 0) beta_true = Vector::Zero(k);
  if (beta0.size() == 0) beta0 = Vector::Zero(k);
  if (theta0.size() != k || beta_true.size() != k || beta0.size() != k) {
    throw ConfigError("theta0, beta_true and beta0 must have length " + std::to_string(k) + " for scheme " +
                      std::string(to_string(scheme)));
  }
  if (batch < 2 || batch % 2 != 0) throw ConfigError("batch must be a positive even number");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  monitor_config();
}

MonitorConfig ExperimentConfig::monitor_config() const {
  MonitorConfig m;
  m.family = family;
  m.method = method;
  m.p = scheme_dimension(scheme);
  m.beta0 = beta0;
  m.tau = tau;
  m.alpha = alpha;
  m.batch = batch;
  m.cap_n = cap_n;
  m.msprt_plugin_variance = msprt_plugin_variance;
  m.validate();
  return m;
}

namespace {

std::string format_vector(const Vector& v) {
  std::ostringstream out;
  out << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v(i);
  out << ')';
  return out.str();
}

}  // namespace

std::string ExperimentConfig::label() const {
  return std::string(to_string(family.kind)) + "/" + std::string(to_string(scheme)) + "/" +
         std::string(to_string(method)) + " beta=" + format_vector(beta_true);
}

ArmBatch generate_arm_batch(const ExperimentConfig& config, std::mt19937_64& rng) {
  const Eigen::Index half = config.batch / 2;
  ArmBatch out;
  const RowMatrix x = generate_covariates(config.scheme, 2 * half, rng);
  out.treatment_x = x.topRows(half);
  out.control_x = x.bottomRows(half);
  const Vector eta_t = out.treatment_x * (config.theta0 + config.beta_true);
  const Vector eta_c = out.control_x * config.theta0;
  out.treatment_y.resize(half);
  out.control_y.resize(half);
  for (Eigen::Index i = 0; i < half; ++i) out.treatment_y(i) = sample_response(config.family, eta_t(i), rng);
  for (Eigen::Index i = 0; i < half; ++i) out.control_y(i) = sample_response(config.family, eta_c(i), rng);
  return out;
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

ReplicationOutcome run_replication(const ExperimentConfig& config, std::uint64_t replication,
                                   std::uint64_t stream, bool stop_on_reject, SstTrace* trace_out) {
  MonitorConfig mc = config.monitor_config();
  mc.stop_on_reject = stop_on_reject;
  SequentialMonitor monitor(mc);
  auto rng = replication_rng(config.seed, replication, stream);
  const auto p = static_cast<std::size_t>(mc.p);

  auto feed = [&](const RowMatrix& x, const Vector& y, Arm arm) {
    for (Eigen::Index i = 0; i < y.size() && !monitor.finished(); ++i) {
      monitor.observe({y(i), arm, std::span<const double>(x.row(i).data() + 1, p)});
    }
  };
  while (!monitor.finished()) {
    const ArmBatch batch = generate_arm_batch(config, rng);
    feed(batch.treatment_x, batch.treatment_y, Arm::treatment);
    feed(batch.control_x, batch.control_y, Arm::control);
  }

  const SstTrace& trace = monitor.trace();
  ReplicationOutcome out;
  out.rejected = trace.decision.has_value();
  if (trace.decision) {
    out.stop_n1 = trace.decision->n1;
    out.stop_n0 = trace.decision->n0;
  } else if (!trace.empty()) {
    out.stop_n1 = trace.checkpoints.back().n1;
    out.stop_n0 = trace.checkpoints.back().n0;
  }
  out.final_p = trace.p_value();
  out.checkpoints = static_cast<std::int64_t>(trace.checkpoints.size());
  for (const auto& cp : trace.checkpoints) out.deferred_checkpoints += cp.deferred ? 1 : 0;
  if (trace_out) *trace_out = trace;
  return out;
}

MetricsReport estimate_operating_characteristics(ExperimentConfig config) {
  config.validate();
  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<ReplicationOutcome> outcomes(reps);
  parallel_for(reps, config.threads, [&](std::size_t r) { outcomes[r] = run_replication(config, r); });

  MetricsReport report;
  report.label = config.label();
  report.method = std::string(to_string(config.method));
  report.replications = config.replications;
  double stop_sum = 0.0;
  for (const auto& o : outcomes) {
    report.deferred_checkpoints += o.deferred_checkpoints;
    if (o.rejected) {
      ++report.rejections;
      stop_sum += static_cast<double>(o.stop_n1);
    }
  }
  const double n = static_cast<double>(reps);
  report.rejection_rate = static_cast<double>(report.rejections) / n;
  report.rejection_se = std::sqrt(report.rejection_rate * (1.0 - report.rejection_rate) / n);
  if (report.rejections > 0) report.mean_stop_n = stop_sum / static_cast<double>(report.rejections);
  return report;
}

void MultipleStudyConfig::validate() {
  base.validate();
  if (m < 4 || m % 4 != 0) throw ConfigError("m must be a positive multiple of 4");
  if (effects.empty()) throw ConfigError("at least one alternative effect size is required");
}

Vector alternating_effect(double magnitude, Eigen::Index length) {
  Vector v(length);
  for (Eigen::Index i = 0; i < length; ++i) v(i) = (i % 2 == 0 ? -magnitude : magnitude);
  return v;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

MetricsReport run_multiple_testing_study(MultipleStudyConfig config) {
  config.validate();
  const auto reps = static_cast<std::size_t>(config.base.replications);
  const auto m = static_cast<std::size_t>(config.m);
  const std::size_t nulls = 3 * m / 4;
  const Eigen::Index k = config.base.beta0.size();

  std::vector<ExperimentConfig> comparisons(m, config.base);
  std::vector<bool> is_alternative(m, false);
  for (std::size_t j = nulls; j < m; ++j) {
    const double b = config.effects[(j - nulls) % config.effects.size()];
    comparisons[j].beta_true = config.base.beta0 + alternating_effect(b, k);
    is_alternative[j] = b != 0.0;
  }
  for (std::size_t j = 0; j < nulls; ++j) comparisons[j].beta_true = config.base.beta0;
  const auto alternatives = static_cast<int>(std::count(is_alternative.begin(), is_alternative.end(), true));

  std::vector<double> p_values(reps * m, 1.0);
  std::vector<std::int64_t> deferred(reps * m, 0);
  parallel_for(reps * m, config.base.threads, [&](std::size_t task) {
    const std::size_t r = task / m;
    const std::size_t j = task % m;
    const ReplicationOutcome o = run_replication(comparisons[j], r, j + 1, /*stop_on_reject=*/false);
    p_values[task] = o.final_p;
    deferred[task] = o.deferred_checkpoints;
  });

  std::vector<double> fdp(reps), tp(reps);
  std::int64_t total_rejections = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    ComparisonBatch batch;
    batch.alpha = config.base.alpha;
    batch.p_values.assign(p_values.begin() + static_cast<std::ptrdiff_t>(r * m),
                          p_values.begin() + static_cast<std::ptrdiff_t>((r + 1) * m));
    const Rejections rej = bh_correlated(batch);
    std::size_t false_rej = 0, true_rej = 0;
    for (std::size_t idx : rej.indices) (is_alternative[idx] ? true_rej : false_rej)++;
    total_rejections += static_cast<std::int64_t>(rej.size());
    fdp[r] = rej.empty() ? 0.0 : static_cast<double>(false_rej) / static_cast<double>(rej.size());
    tp[r] = alternatives > 0 ? static_cast<double>(true_rej) / alternatives : 0.0;
  }

  MetricsReport report;
  report.label = std::string(to_string(config.base.family.kind)) + "/" +
                 std::string(to_string(config.base.scheme)) + "/" +
                 std::string(to_string(config.base.method)) + " multiple m=" + std::to_string(m);
  report.method = std::string(to_string(config.base.method));
  report.replications = config.base.replications;
  report.rejections = total_rejections;
  const double cells = static_cast<double>(reps * m);
  report.rejection_rate = static_cast<double>(total_rejections) / cells;
  report.rejection_se = std::sqrt(report.rejection_rate * (1.0 - report.rejection_rate) / cells);
  for (auto d : deferred) report.deferred_checkpoints += d;

  MultipleMetrics mm;
  mm.m = config.m;
  mm.alternatives = alternatives;
  mm.fdr = mean_of(fdp);
  mm.fdr_se = standard_error(fdp);
  if (alternatives > 0) {
    mm.tpr = mean_of(tp);
    mm.tpr_se = standard_error(tp);
  }
  report.multiple = mm;
  return report;
}

std::string to_table(const MetricsReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "config          " << report.label << '\n';
  out << "method          " << report.method << '\n';
  out << "replications    " << report.replications << '\n';
  out << "rejection rate  " << report.rejection_rate << " (se " << report.rejection_se << ")\n";
  out << "mean stop n     ";
  if (report.mean_stop_n) {
    out << *report.mean_stop_n << '\n';
  } else {
    out << "n/a\n";
  }
  out << "deferred ckpts  " << report.deferred_checkpoints << '\n';
  if (report.multiple) {
    const auto& mm = *report.multiple;
    out << "comparisons     " << mm.m << " (" << mm.alternatives << " alternatives)\n";
    out << "FDR             " << mm.fdr << " (se " << mm.fdr_se << ")\n";
    out << "TPR             ";
    if (mm.tpr) {
      out << *mm.tpr << " (se " << *mm.tpr_se << ")\n";
    } else {
      out << "n/a\n";
    }
  }
  return out.str();
}

std::string to_record(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["config"] = report.label;
  j["method"] = report.method;
  j["replications"] = report.replications;
  j["rejections"] = report.rejections;
  j["rejection_rate"] = report.rejection_rate;
  j["rejection_se"] = report.rejection_se;
  j["mean_stop_n"] = report.mean_stop_n ? nlohmann::ordered_json(*report.mean_stop_n) : nullptr;
  j["deferred_checkpoints"] = report.deferred_checkpoints;
  if (report.multiple) {
    const auto& mm = *report.multiple;
    j["m"] = mm.m;
    j["alternatives"] = mm.alternatives;
    j["fdr"] = mm.fdr;
    j["fdr_se"] = mm.fdr_se;
    j["tpr"] = mm.tpr ? nlohmann::ordered_json(*mm.tpr) : nullptr;
    j["tpr_se"] = mm.tpr_se ? nlohmann::ordered_json(*mm.tpr_se) : nullptr;
  }
  return j.dump();
}

}  // namespace seqscore
