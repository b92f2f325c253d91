#include "seqscore/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqscore/errors.hpp"

namespace seqscore {

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::singular_information: return "singular_information";
    case FitStatus::no_convergence: return "no_convergence";
  }
  return "unknown";
}

namespace {

void check_shapes(const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const Vector>& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("design rows and response length differ");
  if (x.cols() < 1) throw std::invalid_argument("design needs an intercept column");
}

Vector default_start(const FamilySpec& family, const Eigen::Ref<const Vector>& y, Eigen::Index k) {
  Vector theta = Vector::Zero(k);
  const double ybar = y.size() > 0 ? y.mean() : 0.0;
  switch (family.kind) {
    case FamilyKind::bernoulli_logit: {
      const double p = std::clamp(ybar, 1e-3, 1.0 - 1e-3);
      theta(0) = std::log(p / (1.0 - p));
      break;
    }
    case FamilyKind::normal_identity:
      theta(0) = ybar;
      break;
    case FamilyKind::poisson_log:
      theta(0) = std::log(std::max(ybar, 1e-3));
      break;
  }
  return theta;
}

struct Working {
  Vector mu;
  Vector weight;  // dmu/deta, equal to V(mu) for canonical links
};

Working evaluate(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x, const Vector& theta) {
  const Vector eta = x * theta;
  Working w{Vector(eta.size()), Vector(eta.size())};
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    w.mu(i) = inverse_link(family, eta(i));
    w.weight(i) = dmean_deta(family, eta(i));
  }
  return w;
}

}  // namespace

double control_log_likelihood(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x,
                              const Eigen::Ref<const Vector>& y, const Vector& theta) {
  const Vector eta = x * theta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += log_likelihood_term(family, y(i), eta(i));
  return total;
}

ControlFit fit_control_mle(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x,
                           const Eigen::Ref<const Vector>& y, const std::optional<Vector>& init,
                           const FitOptions& options) {
  check_shapes(x, y);
  const Eigen::Index k = x.cols();
  if (x.rows() < k) throw std::invalid_argument("control arm needs at least p+1 rows");

  ControlFit fit;
  fit.theta_hat = (init && init->size() == k && init->allFinite()) ? *init : default_start(family, y, k);

  double loglik = control_log_likelihood(family, x, y, fit.theta_hat);
  int stalls = 0;
  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    const Working w = evaluate(family, x, fit.theta_hat);
    const Vector score = x.transpose() * (y - w.mu) / family.dispersion;
    fit.max_abs_score = score.lpNorm<Eigen::Infinity>();
    if (fit.max_abs_score <= options.score_tolerance || stalls >= 3) {
      fit.status = FitStatus::converged;
      break;
    }

    const Matrix info = x.transpose() * w.weight.asDiagonal() * x / family.dispersion;
    Vector step;
    try {
      const SpdFactor factor(info);
      fit.ridge_applied = fit.ridge_applied || factor.ridged();
      step = factor.solve(score);
    } catch (const SingularInformation&) {
      fit.status = FitStatus::singular_information;
      return fit;
    }

    Vector candidate = fit.theta_hat + step;
    double candidate_loglik = control_log_likelihood(family, x, y, candidate);
    const double slack = 1e-12 * std::abs(loglik);
    for (int h = 0; h < options.max_step_halvings && !(candidate_loglik >= loglik - slack); ++h) {
      step *= 0.5;
      candidate = fit.theta_hat + step;
      candidate_loglik = control_log_likelihood(family, x, y, candidate);
    }

    const double relative_change = std::abs(candidate_loglik - loglik) / (std::abs(loglik) + 1.0);
    stalls = relative_change < options.relative_loglik_tolerance ? stalls + 1 : 0;
    fit.theta_hat = candidate;
    loglik = candidate_loglik;

    if (!fit.theta_hat.allFinite() || fit.theta_hat.norm() > options.divergence_norm) {
      fit.status = FitStatus::no_convergence;
      return fit;
    }
  }

  if (fit.iterations >= options.max_iterations) fit.status = FitStatus::no_convergence;
  if (fit.theta_hat.norm() > options.divergence_norm) fit.status = FitStatus::no_convergence;
  // Under (quasi-)separation the Bernoulli likelihood has no maximizer; the
  // iterates drift until some fitted probabilities are numerically 0 or 1
  // and the score looks converged. Report that as non-convergence.
  if (fit.converged() && family.kind == FamilyKind::bernoulli_logit &&
      (x * fit.theta_hat).cwiseAbs().maxCoeff() > options.separation_eta) {
    fit.status = FitStatus::no_convergence;
  }
  return fit;
}

double estimate_dispersion(const FamilySpec& family, const Eigen::Ref<const RowMatrix>& x,
                           const Eigen::Ref<const Vector>& y, const Vector& theta) {
  check_shapes(x, y);
  const Eigen::Index dof = x.rows() - x.cols();
  if (dof <= 0) throw std::invalid_argument("not enough rows to estimate dispersion");
  const Working w = evaluate(family, x, theta);
  double pearson = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double r = y(i) - w.mu(i);
    pearson += r * r / variance_function(family, w.mu(i));
  }
  return pearson / static_cast<double>(dof);
}

}  // namespace seqscore
