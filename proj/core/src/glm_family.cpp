#include "seqscore/glm_family.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqscore/errors.hpp"

namespace seqscore {

void FamilySpec::validate() const {
  if (!(dispersion > 0.0) || !std::isfinite(dispersion)) {
    throw ConfigError("dispersion must be positive and finite");
  }
  if (kind != FamilyKind::normal_identity && dispersion != 1.0) {
    throw ConfigError(std::string(to_string(kind)) + " requires dispersion 1");
  }
}

FamilySpec make_family(FamilyKind kind, double dispersion) {
  FamilySpec spec{kind, dispersion};
  spec.validate();
  return spec;
}

FamilyKind parse_family_kind(std::string_view name) {
  if (name == "bernoulli_logit" || name == "logistic" || name == "bernoulli") {
    return FamilyKind::bernoulli_logit;
  }
  if (name == "normal_identity" || name == "linear" || name == "normal") {
    return FamilyKind::normal_identity;
  }
  if (name == "poisson_log" || name == "log" || name == "poisson") {
    return FamilyKind::poisson_log;
  }
  throw ConfigError("unknown family '" + std::string(name) + "'");
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::bernoulli_logit: return "bernoulli_logit";
    case FamilyKind::normal_identity: return "normal_identity";
    case FamilyKind::poisson_log: return "poisson_log";
  }
  return "unknown";
}

void LinearPredictorSpec::validate() const {
  if (p < 0) throw ConfigError("covariate dimension p must be non-negative");
  if (mode == PredictorMode::hte && p < 1) {
    throw ConfigError("hte predictor requires at least one covariate");
  }
}

double inverse_link(const FamilySpec& family, double eta) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double e = std::clamp(eta, -kLogitClamp, kLogitClamp);
      return 1.0 / (1.0 + std::exp(-e));
    }
    case FamilyKind::normal_identity:
      return eta;
    case FamilyKind::poisson_log:
      return std::exp(std::clamp(eta, -kLogClamp, kLogClamp));
  }
  return eta;
}

double variance_function(const FamilySpec& family, double mu) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
      if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("bernoulli mean outside (0,1)");
      return mu * (1.0 - mu);
    case FamilyKind::normal_identity:
      if (!std::isfinite(mu)) throw std::domain_error("normal mean must be finite");
      return 1.0;
    case FamilyKind::poisson_log:
      if (!(mu > 0.0) || !std::isfinite(mu)) throw std::domain_error("poisson mean must be positive");
      return mu;
  }
  return 1.0;
}

double dmean_deta(const FamilySpec& family, double eta) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double mu = inverse_link(family, eta);
      return mu * (1.0 - mu);
    }
    case FamilyKind::normal_identity:
      return 1.0;
    case FamilyKind::poisson_log:
      return inverse_link(family, eta);
  }
  return 1.0;
}

double log_likelihood_term(const FamilySpec& family, double y, double eta) {
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double e = std::clamp(eta, -kLogitClamp, kLogitClamp);
      // y*e - log(1 + exp(e)) without overflow
      return y * e - (std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))));
    }
    case FamilyKind::normal_identity:
      return (y * eta - 0.5 * eta * eta) / family.dispersion;
    case FamilyKind::poisson_log: {
      const double e = std::clamp(eta, -kLogClamp, kLogClamp);
      return y * e - std::exp(e);
    }
  }
  return 0.0;
}

double sample_response(const FamilySpec& family, double eta, std::mt19937_64& rng) {
  const double mu = inverse_link(family, eta);
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
      return std::bernoulli_distribution(mu)(rng) ? 1.0 : 0.0;
    case FamilyKind::normal_identity:
      return std::normal_distribution<double>(mu, std::sqrt(family.dispersion))(rng);
    case FamilyKind::poisson_log:
      return static_cast<double>(std::poisson_distribution<long long>(mu)(rng));
  }
  return mu;
}

bool valid_response(const FamilySpec& family, double y) {
  if (!std::isfinite(y)) return false;
  switch (family.kind) {
    case FamilyKind::bernoulli_logit:
      return y == 0.0 || y == 1.0;
    case FamilyKind::normal_identity:
      return true;
    case FamilyKind::poisson_log:
      return y >= 0.0 && std::floor(y) == y;
  }
  return false;
}

}  // namespace seqscore
