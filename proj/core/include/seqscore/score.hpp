#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "seqscore/glm_family.hpp"
#include "seqscore/linalg.hpp"
#include "seqscore/nuisance.hpp"

namespace seqscore {

enum class Arm { control = 0, treatment = 1 };

std::string_view to_string(Arm arm);

/// Append-only per-arm observation store. Rows always start with the
/// intercept 1; `x()` and `y()` are zero-copy views over the storage.
class ArmData {
 public:
  ArmData(Arm arm, int columns);

  /// Copies a design whose first column must be all ones.
  static ArmData from(Arm arm, const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const Vector>& y);

  /// Appends one observation; `covariates` excludes the intercept.
  void append(std::span<const double> covariates, double response);

  Arm arm() const { return arm_; }
  int columns() const { return columns_; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(y_.size()); }
  bool empty() const { return y_.empty(); }

  Eigen::Map<const RowMatrix> x() const { return {x_.data(), rows(), columns_}; }
  Eigen::Map<const Vector> y() const { return {y_.data(), rows()}; }

  const std::vector<double>& raw_x() const { return x_; }
  const std::vector<double>& raw_y() const { return y_; }
  void reserve(std::size_t rows);

 private:
  Arm arm_;
  int columns_;
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Score-test quantities at one monitoring checkpoint. Information averages
/// use per-arm counts; s_bar is normalized by n1.
struct ScoreSnapshot {
  std::int64_t n1 = 0;
  std::int64_t n0 = 0;
  Vector s_bar;
  Matrix info1;
  Matrix info0;
  Matrix v_n;
  Vector theta_hat;
};

/// Treatment-arm score of beta at (theta, beta0): sum x_i (y_i - mu_i) / a.
Vector score_treatment(const FamilySpec& family, const ArmData& data, const Vector& theta, const Vector& beta0);

/// Control-arm score of theta: sum x_i (y_i - mu_i) / a.
Vector score_control(const FamilySpec& family, const ArmData& data, const Vector& theta);

/// (1/n1) sum V(mu_i) x_i x_i^T / a with mu_i at eta = (theta + beta0)^T x_i.
Matrix info_treatment(const FamilySpec& family, const ArmData& data, const Vector& theta, const Vector& beta0);

/// (1/n0) sum V(mu_i) x_i x_i^T / a with mu_i at eta = theta^T x_i.
Matrix info_control(const FamilySpec& family, const ArmData& data, const Vector& theta);

/// info1 + info1 * info0^{-1} * info1, symmetrized. Throws SingularInformation.
Matrix composite_v(const Matrix& info1, const Matrix& info0);

enum class DeferReason { none, insufficient_samples, singular_information, no_convergence, zero_variance };

std::string_view to_string(DeferReason reason);

struct SnapshotOutcome {
  std::optional<ScoreSnapshot> snapshot;
  DeferReason reason = DeferReason::none;
  /// Present whenever the control fit ran (also on deferral after the fit).
  std::optional<ControlFit> fit;
};

/// Smallest per-arm count for which a snapshot is produced.
inline std::int64_t minimum_arm_count(int columns) { return 5 * static_cast<std::int64_t>(columns); }

/// Fits theta on the control arm (warm-started from `warm_start` when
/// given) and evaluates every snapshot field at the fitted theta.
/// Estimation failures and the sample gate defer instead of throwing.
SnapshotOutcome snapshot(const FamilySpec& family, const ArmData& treatment, const ArmData& control,
                         const Vector& beta0, const std::optional<Vector>& warm_start = std::nullopt,
                         const FitOptions& options = {});

}  // namespace seqscore
