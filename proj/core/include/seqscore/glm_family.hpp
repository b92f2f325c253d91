#pragma once

#include <random>
#include <string>
#include <string_view>

namespace seqscore {

/// The three canonical-link exponential families supported by the engine.
enum class FamilyKind { bernoulli_logit, normal_identity, poisson_log };

/// Response model: family kind plus the known dispersion a(phi).
/// Bernoulli and Poisson are fixed at dispersion 1.
struct FamilySpec {
  FamilyKind kind = FamilyKind::bernoulli_logit;
  double dispersion = 1.0;

  /// Throws ConfigError when the invariants above do not hold.
  void validate() const;
};

FamilySpec make_family(FamilyKind kind, double dispersion = 1.0);

/// Accepts both the long names (`bernoulli_logit`) and the short regression
/// names (`logistic`, `linear`, `log`).
FamilyKind parse_family_kind(std::string_view name);
std::string_view to_string(FamilyKind kind);

enum class PredictorMode { ate, hte };

/// Shape of the linear predictor. `p` excludes the intercept, so covariate
/// vectors have length p + 1 with a leading 1.
struct LinearPredictorSpec {
  PredictorMode mode = PredictorMode::hte;
  int p = 1;

  void validate() const;
  int dimension() const { return p + 1; }
};

/// Logit link input is clamped to this range before exponentiation.
inline constexpr double kLogitClamp = 30.0;
/// Log link input is clamped to this range so the mean stays finite and
/// strictly positive.
inline constexpr double kLogClamp = 700.0;

double inverse_link(const FamilySpec& family, double eta);

/// b''(gamma(mu)), excluding the dispersion. Throws std::domain_error for a
/// mean outside the family's support.
double variance_function(const FamilySpec& family, double mu);

/// d mu / d eta. For canonical links this equals
/// variance_function(inverse_link(eta)).
double dmean_deta(const FamilySpec& family, double eta);

/// Log density of one response up to terms that do not depend on the mean.
double log_likelihood_term(const FamilySpec& family, double y, double eta);

/// Draws a response with mean inverse_link(eta). Normal responses use
/// variance equal to the dispersion.
double sample_response(const FamilySpec& family, double eta, std::mt19937_64& rng);

/// True when `y` lies in the family's response support.
bool valid_response(const FamilySpec& family, double y);

}  // namespace seqscore
