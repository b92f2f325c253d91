#include "seqscore/sst.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "seqscore/errors.hpp"

namespace seqscore {

void PriorSpec::validate(Eigen::Index dimension) const {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("prior scale tau must be finite and >= 0");
  if (beta0.size() != dimension) {
    throw ConfigError("beta0 has dimension " + std::to_string(beta0.size()) + ", expected " +
                      std::to_string(dimension));
  }
}

namespace {

void require_snapshot_shape(const ScoreSnapshot& snap, Eigen::Index k) {
  if (snap.s_bar.size() != k || snap.info1.rows() != k || snap.v_n.rows() != k) {
    throw std::invalid_argument("snapshot and effect vectors have inconsistent dimensions");
  }
  if (snap.n1 < 1) throw std::invalid_argument("snapshot has no treatment observations");
}

}  // namespace

double log_lambda_tilde(const ScoreSnapshot& snap, const Vector& beta, const Vector& beta0) {
  if (beta.size() != beta0.size()) throw std::invalid_argument("beta and beta0 dimensions differ");
  require_snapshot_shape(snap, beta.size());
  const Vector mean_shift = snap.info1 * (beta - beta0);
  const SpdFactor v(snap.v_n);
  const Vector w = v.solve(mean_shift);
  const double n = static_cast<double>(snap.n1);
  return n * (snap.s_bar.dot(w) - 0.5 * mean_shift.dot(w));
}

double lambda_tilde(const ScoreSnapshot& snap, const Vector& beta, const Vector& beta0) {
  return std::exp(log_lambda_tilde(snap, beta, beta0));
}

double log_mixture_statistic(const ScoreSnapshot& snap, const PriorSpec& prior) {
  const Eigen::Index k = snap.s_bar.size();
  prior.validate(k);
  require_snapshot_shape(snap, k);
  if (prior.tau == 0.0) return 0.0;

  const SpdFactor v(snap.v_n);
  const double n = static_cast<double>(snap.n1);
  const Matrix a = symmetrize(n * snap.info1.transpose() * v.solve(snap.info1));
  const Vector b = n * snap.info1.transpose() * v.solve(snap.s_bar);

  const double tau2 = prior.tau * prior.tau;
  const Matrix m = Matrix::Identity(k, k) + tau2 * a;
  const Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw SingularInformation("mixture precision is not positive definite");
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * log_det + 0.5 * tau2 * b.dot(llt.solve(b));
}

double mixture_statistic(const ScoreSnapshot& snap, const PriorSpec& prior) {
  return std::exp(log_mixture_statistic(snap, prior));
}

double SstTrace::p_value() const { return p_value_from_log_max(log_running_max); }

double p_value_from_log_max(double log_max) {
  if (!(log_max > 0.0)) return 1.0;
  return std::exp(-log_max);
}

const Checkpoint& update_trace(SstTrace& trace, std::optional<double> log_lambda_mix, std::int64_t n1,
                               std::int64_t n0, DeferReason reason, bool partial) {
  Checkpoint cp;
  cp.n1 = n1;
  cp.n0 = n0;
  cp.partial = partial;
  cp.deferred = !log_lambda_mix.has_value();
  cp.reason = cp.deferred && reason == DeferReason::none ? DeferReason::singular_information : reason;
  if (!cp.deferred) {
    cp.reason = DeferReason::none;
    cp.log_lambda_mix = log_lambda_mix;
    if (*log_lambda_mix > trace.log_running_max) trace.log_running_max = *log_lambda_mix;
  }
  cp.log_running_max = trace.log_running_max;
  cp.p_value = trace.p_value();
  if (!trace.decision && reaches_boundary(trace.log_running_max, trace.alpha)) {
    trace.decision = Decision{trace.checkpoints.size(), n1, n0};
  }
  cp.decided = trace.decision.has_value();
  trace.checkpoints.push_back(cp);
  return trace.checkpoints.back();
}

bool reaches_boundary(double log_max, double alpha) { return log_max >= -std::log(alpha); }

std::optional<std::size_t> stop_index(const SstTrace& trace, double alpha) {
  for (std::size_t i = 0; i < trace.checkpoints.size(); ++i) {
    if (reaches_boundary(trace.checkpoints[i].log_running_max, alpha)) return i;
  }
  return std::nullopt;
}

std::string to_record(const Checkpoint& checkpoint) {
  nlohmann::ordered_json j;
  j["n1"] = checkpoint.n1;
  j["n0"] = checkpoint.n0;
  if (checkpoint.log_lambda_mix) {
    j["log_lambda_mix"] = *checkpoint.log_lambda_mix;
  } else {
    j["log_lambda_mix"] = nullptr;
  }
  j["p_value"] = checkpoint.p_value;
  j["deferred"] = checkpoint.deferred;
  j["decided"] = checkpoint.decided;
  j["partial"] = checkpoint.partial;
  return j.dump();
}

void write_trace(std::ostream& out, const SstTrace& trace) {
  for (const auto& cp : trace.checkpoints) out << to_record(cp) << '\n';
}

}  // namespace seqscore
