#pragma once

#include <optional>
#include <string_view>

#include "seqscore/glm_family.hpp"
#include "seqscore/linalg.hpp"

namespace seqscore {

enum class FitStatus { converged, singular_information, no_convergence };

std::string_view to_string(FitStatus status);

/// Result of the control-arm maximum likelihood fit.
struct ControlFit {
  Vector theta_hat;
  FitStatus status = FitStatus::no_convergence;
  int iterations = 0;
  /// Infinity norm of the control score at theta_hat.
  double max_abs_score = 0.0;
  /// The weighted normal equations needed the ridge guard at least once.
  bool ridge_applied = false;

  bool converged() const { return status == FitStatus::converged; }
};

struct FitOptions {
  double score_tolerance = 1e-8;
  /// Relative log-likelihood change treated as a floating-point stall.
  double relative_loglik_tolerance = 1e-10;
  int max_iterations = 100;
  int max_step_halvings = 20;
  /// ||theta|| beyond this is reported as divergence (e.g. separation).
  double divergence_norm = 1e3;
  /// Bernoulli fits with a linear predictor beyond this magnitude (fitted
  /// probability within ~1e-10 of 0 or 1) are treated as separated.
  double separation_eta = 23.0;
};

/// Control-arm log-likelihood (up to terms free of theta).
double control_log_likelihood(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x,
                              const Eigen::Ref<const Vector>& y, const Vector& theta);

/// Fits theta by IRLS (Newton scoring, exact for canonical links) with
/// step-halving on log-likelihood decrease.
///
/// Numerical failures are reported through `ControlFit::status`; the caller
/// decides whether to defer. Shape violations (fewer rows than columns,
/// mismatched lengths) throw std::invalid_argument.
ControlFit fit_control_mle(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x,
                           const Eigen::Ref<const Vector>& y,
                           const std::optional<Vector>& init = std::nullopt,
                           const FitOptions& options = {});

/// Pearson residual variance on the control arm. Reporting only; the test
/// itself always uses the configured dispersion.
double estimate_dispersion(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x,
                           const Eigen::Ref<const Vector>& y, const Vector& theta);

}  // namespace seqscore
