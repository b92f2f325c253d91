#pragma once

#include "seqscore/linalg.hpp"
#include "seqscore/score.hpp"
#include "seqscore/trace.hpp"

namespace seqscore {

/// Isotropic Gaussian mixing distribution N(beta0, tau^2 I) over the
/// treatment effect. tau = 0 is the point mass at beta0.
struct PriorSpec {
  Vector beta0;
  double tau = 1.0;

  void validate(Eigen::Index dimension) const;
};

/// Log of the ratio of the score's asymptotic densities under beta and under
/// beta0: N(info1 (beta - beta0), v_n / n1) over N(0, v_n / n1), both at s_bar.
double log_lambda_tilde(const ScoreSnapshot& snap, const Vector& beta, const Vector& beta0);
double lambda_tilde(const ScoreSnapshot& snap, const Vector& beta, const Vector& beta0);

/// Log of the ratio integrated against the prior, in closed form:
///
///   A = n1 info1' V^{-1} info1,   b = n1 info1' V^{-1} s_bar,
///   log L = -1/2 log det(I + tau^2 A) + 1/2 tau^2 b' (I + tau^2 A)^{-1} b.
///
/// Throws SingularInformation when v_n cannot be factored.
double log_mixture_statistic(const ScoreSnapshot& snap, const PriorSpec& prior);
double mixture_statistic(const ScoreSnapshot& snap, const PriorSpec& prior);

}  // namespace seqscore
