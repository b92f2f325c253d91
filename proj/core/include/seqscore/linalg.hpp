#pragma once

#include <Eigen/Dense>

namespace seqscore {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cholesky factorization of a symmetric positive (semi)definite matrix with
/// a ridge fallback. When the plain factorization fails or its reciprocal
/// condition estimate falls below `kRcondFloor`, the factorization is retried
/// on `m + ridge * mean(diag(m)) * I` and `ridged()` reports it.
class SpdFactor {
 public:
  static constexpr double kRidge = 1e-10;
  static constexpr double kRcondFloor = 1e-12;

  /// Throws SingularInformation when even the ridged matrix cannot be
  /// factored (non-finite entries, non-positive diagonal mean).
  explicit SpdFactor(const Matrix& m);

  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }

  double log_determinant() const;
  bool ridged() const noexcept { return ridged_; }
  Eigen::Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
  bool ridged_ = false;
};

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace seqscore
