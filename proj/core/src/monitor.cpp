#include "seqscore/monitor.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "seqscore/errors.hpp"

namespace seqscore {

using nlohmann::json;

Method parse_method(std::string_view name) {
  if (name == "sst") return Method::sst;
  if (name == "msprt") return Method::msprt;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected sst or msprt)");
}

std::string_view to_string(Method method) { return method == Method::sst ? "sst" : "msprt"; }

void MonitorConfig::validate() {
  family.validate();
  if (p < 0) throw ConfigError("p must be non-negative");
  if (beta0.size() == 0) beta0 = Vector::Zero(p + 1);
  if (beta0.size() != p + 1) throw ConfigError("beta0 must have length p + 1");
  if (!beta0.allFinite()) throw ConfigError("beta0 must be finite");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be finite and >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (cap_n < 1) throw ConfigError("cap_n must be >= 1");
  if (method == Method::msprt && family.kind == FamilyKind::poisson_log) {
    throw ConfigError("mSPRT baseline supports normal and bernoulli responses only");
  }
}

Vector MonitorConfig::null_effect() const {
  return beta0.size() == 0 ? Vector::Zero(p + 1) : beta0;
}

std::string MonitorConfig::canonical() const {
  nlohmann::ordered_json j;
  j["family"] = to_string(family.kind);
  j["dispersion"] = family.dispersion;
  j["method"] = to_string(method);
  j["p"] = p;
  const Vector b = null_effect();
  j["beta0"] = std::vector<double>(b.data(), b.data() + b.size());
  j["tau"] = tau;
  j["alpha"] = alpha;
  j["batch"] = batch;
  j["cap_n"] = cap_n;
  j["stop_on_reject"] = stop_on_reject;
  j["msprt_plugin_variance"] = msprt_plugin_variance;
  return j.dump();
}

SequentialMonitor::SequentialMonitor(MonitorConfig config)
    : config_((config.validate(), std::move(config))),
      treatment_(Arm::treatment, config_.p + 1),
      control_(Arm::control, config_.p + 1) {
  trace_.alpha = config_.alpha;
  msprt_.family = config_.family;
  msprt_.tau = config_.tau;
  msprt_.plugin_variance = config_.msprt_plugin_variance;
}

std::int64_t SequentialMonitor::treatment_count() const {
  return config_.method == Method::sst ? treatment_.rows() : msprt_.treatment.n;
}

std::int64_t SequentialMonitor::control_count() const {
  return config_.method == Method::sst ? control_.rows() : msprt_.control.n;
}

void SequentialMonitor::validate_observation(const Observation& obs) const {
  const auto position = static_cast<std::size_t>(events_);
  if (static_cast<int>(obs.covariates.size()) != config_.p) {
    throw MalformedRecord(position, "expected " + std::to_string(config_.p) + " covariates, got " +
                                        std::to_string(obs.covariates.size()));
  }
  for (double c : obs.covariates) {
    if (!std::isfinite(c)) throw MalformedRecord(position, "non-finite covariate");
  }
  if (!valid_response(config_.family, obs.response)) {
    throw MalformedRecord(position, "response outside the support of " +
                                        std::string(to_string(config_.family.kind)));
  }
}

std::optional<Checkpoint> SequentialMonitor::observe(const Observation& obs) {
  if (finished_) return std::nullopt;
  validate_observation(obs);
  if (config_.method == Method::sst) {
    (obs.arm == Arm::treatment ? treatment_ : control_).append(obs.covariates, obs.response);
  } else {
    msprt_.add(obs.arm, obs.response);
  }
  ++events_;
  if (++pending_ < config_.batch) return std::nullopt;
  return checkpoint(false);
}

std::optional<Checkpoint> SequentialMonitor::flush() {
  if (finished_ || pending_ == 0) return std::nullopt;
  return checkpoint(true);
}

Checkpoint SequentialMonitor::checkpoint(bool partial) {
  pending_ = 0;
  std::optional<double> log_lambda;
  DeferReason reason = DeferReason::none;

  if (config_.method == Method::sst) {
    SnapshotOutcome outcome =
        snapshot(config_.family, treatment_, control_, config_.null_effect(), warm_start_, config_.fit);
    reason = outcome.reason;
    if (outcome.snapshot) {
      warm_start_ = outcome.snapshot->theta_hat;
      try {
        const double value = log_mixture_statistic(*outcome.snapshot, config_.prior());
        if (std::isfinite(value)) {
          log_lambda = value;
        } else {
          reason = DeferReason::singular_information;
        }
      } catch (const SingularInformation&) {
        reason = DeferReason::singular_information;
      }
      last_snapshot_ = std::move(outcome.snapshot);
    }
  } else {
    const MsprtEvaluation eval = msprt_statistic(msprt_);
    log_lambda = eval.log_lambda;
    reason = eval.reason;
  }

  const Checkpoint& cp =
      update_trace(trace_, log_lambda, treatment_count(), control_count(), reason, partial);
  if ((config_.stop_on_reject && trace_.decision) ||
      std::min(cp.n1, cp.n0) >= config_.cap_n || partial) {
    finished_ = true;
  }
  return cp;
}

namespace {

json vec_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json log_to_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double log_from_json(const json& j) {
  return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

json moments_to_json(const ArmMoments& m) { return {{"n", m.n}, {"mean", m.mean}, {"m2", m.m2}}; }

ArmMoments moments_from_json(const json& j) {
  return {j.at("n").get<std::int64_t>(), j.at("mean").get<double>(), j.at("m2").get<double>()};
}

json arm_to_json(const ArmData& a) { return {{"x", a.raw_x()}, {"y", a.raw_y()}}; }

ArmData arm_from_json(Arm arm, int columns, const json& j) {
  const auto x = j.at("x").get<std::vector<double>>();
  const auto y = j.at("y").get<std::vector<double>>();
  if (x.size() != y.size() * static_cast<std::size_t>(columns)) {
    throw StateError("arm store shape does not match configuration");
  }
  ArmData data(arm, columns);
  data.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    data.append(std::span<const double>(x.data() + i * columns + 1, static_cast<std::size_t>(columns - 1)),
                y[i]);
  }
  return data;
}

}  // namespace

std::string SequentialMonitor::save_state() const {
  json j;
  j["events"] = events_;
  j["pending"] = pending_;
  j["finished"] = finished_;
  j["treatment"] = arm_to_json(treatment_);
  j["control"] = arm_to_json(control_);
  j["msprt_treatment"] = moments_to_json(msprt_.treatment);
  j["msprt_control"] = moments_to_json(msprt_.control);
  j["warm_start"] = warm_start_ ? vec_to_json(*warm_start_) : json(nullptr);
  j["log_running_max"] = log_to_json(trace_.log_running_max);
  json cps = json::array();
  for (const auto& cp : trace_.checkpoints) {
    cps.push_back({{"n1", cp.n1},
                   {"n0", cp.n0},
                   {"log_lambda_mix", cp.log_lambda_mix ? json(*cp.log_lambda_mix) : json(nullptr)},
                   {"log_running_max", log_to_json(cp.log_running_max)},
                   {"p_value", cp.p_value},
                   {"deferred", cp.deferred},
                   {"decided", cp.decided},
                   {"partial", cp.partial},
                   {"reason", static_cast<int>(cp.reason)}});
  }
  j["checkpoints"] = std::move(cps);
  if (trace_.decision) {
    j["decision"] = {{"stop_index", trace_.decision->stop_index},
                     {"n1", trace_.decision->n1},
                     {"n0", trace_.decision->n0}};
  } else {
    j["decision"] = nullptr;
  }
  return j.dump();
}

SequentialMonitor SequentialMonitor::load_state(MonitorConfig config, std::string_view state) {
  SequentialMonitor m(std::move(config));
  try {
    const json j = json::parse(state);
    const int columns = m.config_.p + 1;
    m.events_ = j.at("events").get<std::int64_t>();
    m.pending_ = j.at("pending").get<int>();
    m.finished_ = j.at("finished").get<bool>();
    m.treatment_ = arm_from_json(Arm::treatment, columns, j.at("treatment"));
    m.control_ = arm_from_json(Arm::control, columns, j.at("control"));
    m.msprt_.treatment = moments_from_json(j.at("msprt_treatment"));
    m.msprt_.control = moments_from_json(j.at("msprt_control"));
    if (!j.at("warm_start").is_null()) m.warm_start_ = vec_from_json(j.at("warm_start"));
    m.trace_.log_running_max = log_from_json(j.at("log_running_max"));
    for (const auto& c : j.at("checkpoints")) {
      Checkpoint cp;
      cp.n1 = c.at("n1").get<std::int64_t>();
      cp.n0 = c.at("n0").get<std::int64_t>();
      if (!c.at("log_lambda_mix").is_null()) cp.log_lambda_mix = c.at("log_lambda_mix").get<double>();
      cp.log_running_max = log_from_json(c.at("log_running_max"));
      cp.p_value = c.at("p_value").get<double>();
      cp.deferred = c.at("deferred").get<bool>();
      cp.decided = c.at("decided").get<bool>();
      cp.partial = c.at("partial").get<bool>();
      cp.reason = static_cast<DeferReason>(c.at("reason").get<int>());
      m.trace_.checkpoints.push_back(cp);
    }
    if (!j.at("decision").is_null()) {
      const auto& d = j.at("decision");
      m.trace_.decision = Decision{d.at("stop_index").get<std::size_t>(), d.at("n1").get<std::int64_t>(),
                                   d.at("n0").get<std::int64_t>()};
    }
  } catch (const json::exception& e) {
    throw StateError(std::string("malformed monitor state: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw StateError(std::string("malformed monitor state: ") + e.what());
  }
  return m;
}

SstTrace run_monitor(std::span<const Observation> stream, const MonitorConfig& config) {
  SequentialMonitor monitor(config);
  for (const auto& obs : stream) {
    if (monitor.finished()) break;
    monitor.observe(obs);
  }
  monitor.flush();
  return monitor.trace();
}

SstTrace run_sst(std::span<const Observation> stream, MonitorConfig config) {
  config.method = Method::sst;
  return run_monitor(stream, config);
}

SstTrace run_msprt(std::span<const Observation> stream, MonitorConfig config) {
  config.method = Method::msprt;
  return run_monitor(stream, config);
}

}  // namespace seqscore
