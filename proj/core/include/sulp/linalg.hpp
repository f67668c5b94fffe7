#pragma once

#include <Eigen/Dense>

namespace sulp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Lower Cholesky factor of a symmetric matrix, with the diagonal jitter that
/// was needed to obtain it.
struct Cholesky {
  MatrixXd lower;
  double jitter = 0.0;

  double log_det() const;
  /// Solve A x = b.
  VectorXd solve(const VectorXd& b) const;
  MatrixXd solve(const MatrixXd& b) const;
  MatrixXd inverse() const;
};

/// Plain Cholesky; throws NumericalError::NotSPD if A is not positive definite.
Cholesky cholesky(const MatrixXd& a);

/// Cholesky with a bounded jitter ladder: tries A, then A + eps I with eps
/// running from rel_start * tr(A)/n up to rel_max * tr(A)/n in x10 steps.
/// Throws NumericalError::NotSPD when the ladder is exhausted.
Cholesky cholesky_jittered(const MatrixXd& a, double rel_start = 1e-10, double rel_max = 1e-6);

/// log N(x | mean, A) given the Cholesky factor of A.
double mvn_log_density(const VectorXd& x, const VectorXd& mean, const Cholesky& chol);

/// Symmetrize in place (average with the transpose).
void symmetrize(MatrixXd& a);

}  // namespace sulp
