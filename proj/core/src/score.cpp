#include "seqscore/score.hpp"

#include <stdexcept>

#include "seqscore/errors.hpp"

namespace seqscore {

std::string_view to_string(Arm arm) { return arm == Arm::treatment ? "treatment" : "control"; }

std::string_view to_string(DeferReason reason) {
  switch (reason) {
    case DeferReason::none: return "none";
    case DeferReason::insufficient_samples: return "insufficient_samples";
    case DeferReason::singular_information: return "singular_information";
    case DeferReason::no_convergence: return "no_convergence";
    case DeferReason::zero_variance: return "zero_variance";
  }
  return "unknown";
}

ArmData::ArmData(Arm arm, int columns) : arm_(arm), columns_(columns) {
  if (columns < 1) throw std::invalid_argument("arm data needs at least the intercept column");
}

ArmData ArmData::from(Arm arm, const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const Vector>& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("design rows and response length differ");
  ArmData data(arm, static_cast<int>(x.cols()));
  if (x.rows() > 0 && (x.col(0).array() != 1.0).any()) {
    throw std::invalid_argument("first design column must be all ones");
  }
  data.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) data.x_.push_back(x(i, j));
    data.y_.push_back(y(i));
  }
  return data;
}

void ArmData::append(std::span<const double> covariates, double response) {
  if (static_cast<int>(covariates.size()) + 1 != columns_) {
    throw std::invalid_argument("covariate length does not match arm dimension");
  }
  x_.push_back(1.0);
  x_.insert(x_.end(), covariates.begin(), covariates.end());
  y_.push_back(response);
}

void ArmData::reserve(std::size_t rows) {
  x_.reserve(rows * static_cast<std::size_t>(columns_));
  y_.reserve(rows);
}

namespace {

void require_arm(const ArmData& data, Arm expected) {
  if (data.arm() != expected) {
    throw std::invalid_argument("expected " + std::string(to_string(expected)) + " arm data");
  }
}

void require_dim(const ArmData& data, const Vector& v, const char* name) {
  if (v.size() != data.columns()) {
    throw std::invalid_argument(std::string(name) + " has dimension " + std::to_string(v.size()) +
                                ", expected " + std::to_string(data.columns()));
  }
}

Vector residual_score(const FamilySpec& family, const ArmData& data, const Vector& coef) {
  const auto x = data.x();
  const Vector eta = x * coef;
  Vector resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = data.y()(i) - inverse_link(family, eta(i));
  return x.transpose() * resid / family.dispersion;
}

Matrix average_information(const FamilySpec& family, const ArmData& data, const Vector& coef) {
  if (data.empty()) throw std::invalid_argument("information average needs at least one row");
  const auto x = data.x();
  const Vector eta = x * coef;
  Vector weight(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) weight(i) = dmean_deta(family, eta(i));
  const RowMatrix weighted = x.array().colwise() * weight.array();
  const Matrix info = x.transpose() * weighted / (family.dispersion * static_cast<double>(data.rows()));
  return symmetrize(info);
}

}  // namespace

Vector score_treatment(const FamilySpec& family, const ArmData& data, const Vector& theta, const Vector& beta0) {
  require_arm(data, Arm::treatment);
  require_dim(data, theta, "theta");
  require_dim(data, beta0, "beta0");
  return residual_score(family, data, theta + beta0);
}

Vector score_control(const FamilySpec& family, const ArmData& data, const Vector& theta) {
  require_arm(data, Arm::control);
  require_dim(data, theta, "theta");
  return residual_score(family, data, theta);
}

Matrix info_treatment(const FamilySpec& family, const ArmData& data, const Vector& theta, const Vector& beta0) {
  require_arm(data, Arm::treatment);
  require_dim(data, theta, "theta");
  require_dim(data, beta0, "beta0");
  return average_information(family, data, theta + beta0);
}

Matrix info_control(const FamilySpec& family, const ArmData& data, const Vector& theta) {
  require_arm(data, Arm::control);
  require_dim(data, theta, "theta");
  return average_information(family, data, theta);
}

Matrix composite_v(const Matrix& info1, const Matrix& info0) {
  if (info1.rows() != info0.rows() || info1.cols() != info0.cols() || info1.rows() != info1.cols()) {
    throw std::invalid_argument("information matrices must be square with equal shapes");
  }
  const SpdFactor factor(info0);
  return symmetrize(info1 + info1 * factor.solve(info1));
}

SnapshotOutcome snapshot(const FamilySpec& family, const ArmData& treatment, const ArmData& control,
                         const Vector& beta0, const std::optional<Vector>& warm_start,
                         const FitOptions& options) {
  require_arm(treatment, Arm::treatment);
  require_arm(control, Arm::control);
  if (treatment.columns() != control.columns()) throw std::invalid_argument("arm dimensions differ");
  require_dim(treatment, beta0, "beta0");

  SnapshotOutcome out;
  const std::int64_t gate = minimum_arm_count(treatment.columns());
  if (treatment.rows() < gate || control.rows() < gate) {
    out.reason = DeferReason::insufficient_samples;
    return out;
  }

  out.fit = fit_control_mle(family, control.x(), control.y(), warm_start, options);
  if (out.fit->status == FitStatus::singular_information) {
    out.reason = DeferReason::singular_information;
    return out;
  }
  if (out.fit->status == FitStatus::no_convergence) {
    out.reason = DeferReason::no_convergence;
    return out;
  }

  const Vector& theta = out.fit->theta_hat;
  ScoreSnapshot snap;
  snap.n1 = treatment.rows();
  snap.n0 = control.rows();
  snap.theta_hat = theta;
  snap.s_bar = score_treatment(family, treatment, theta, beta0) / static_cast<double>(snap.n1);
  snap.info1 = info_treatment(family, treatment, theta, beta0);
  snap.info0 = info_control(family, control, theta);
  try {
    snap.v_n = composite_v(snap.info1, snap.info0);
  } catch (const SingularInformation&) {
    out.reason = DeferReason::singular_information;
    return out;
  }
  out.snapshot = std::move(snap);
  return out;
}

}  // namespace seqscore
