#include "seqscore/linalg.hpp"

#include <cmath>

#include "seqscore/errors.hpp"

namespace seqscore {

namespace {

bool usable(const Eigen::LLT<Matrix>& llt) {
  return llt.info() == Eigen::Success && llt.rcond() >= SpdFactor::kRcondFloor;
}

}  // namespace

SpdFactor::SpdFactor(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw SingularInformation("information matrix must be square and non-empty");
  }
  if (!m.allFinite()) throw SingularInformation("information matrix has non-finite entries");

  llt_.compute(m);
  if (usable(llt_)) return;

  const double mean_diag = m.diagonal().mean();
  if (!(mean_diag > 0.0)) throw SingularInformation("information matrix has non-positive trace");
  Matrix ridged = m;
  ridged.diagonal().array() += kRidge * mean_diag;
  llt_.compute(ridged);
  ridged_ = true;
  if (llt_.info() != Eigen::Success) {
    throw SingularInformation("information matrix is not positive definite after ridge guard");
  }
}

double SpdFactor::log_determinant() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

}  // namespace seqscore
