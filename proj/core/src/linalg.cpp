#include "sulp/linalg.hpp"

#include "sulp/errors.hpp"

#include <cmath>
#include <numbers>

namespace sulp {

double Cholesky::log_det() const { return 2.0 * lower.diagonal().array().log().sum(); }

VectorXd Cholesky::solve(const VectorXd& b) const {
  VectorXd y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

MatrixXd Cholesky::solve(const MatrixXd& b) const {
  MatrixXd y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

MatrixXd Cholesky::inverse() const {
  return solve(MatrixXd::Identity(lower.rows(), lower.rows()).eval());
}

Cholesky cholesky(const MatrixXd& a) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError(NumericalError::Kind::NotSPD, "matrix is not positive definite");
  return Cholesky{llt.matrixL(), 0.0};
}

Cholesky cholesky_jittered(const MatrixXd& a, double rel_start, double rel_max) {
  const Index n = a.rows();
  if (n == 0) return Cholesky{MatrixXd(0, 0), 0.0};
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return Cholesky{llt.matrixL(), 0.0};

  const double scale = std::abs(a.trace()) / static_cast<double>(n);
  MatrixXd work = a;
  for (double rel = rel_start; rel <= rel_max * (1.0 + 1e-9); rel *= 10.0) {
    const double eps = rel * (scale > 0.0 ? scale : 1.0);
    work = a;
    work.diagonal().array() += eps;
    llt.compute(work);
    if (llt.info() == Eigen::Success) return Cholesky{llt.matrixL(), eps};
  }
  throw NumericalError(NumericalError::Kind::NotSPD, "matrix is not positive definite after maximal jitter");
}

double mvn_log_density(const VectorXd& x, const VectorXd& mean, const Cholesky& chol) {
  const VectorXd z = chol.lower.triangularView<Eigen::Lower>().solve(x - mean);
  const double n = static_cast<double>(x.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * chol.log_det() - 0.5 * z.squaredNorm();
}

void symmetrize(MatrixXd& a) { a = 0.5 * (a + a.transpose()).eval(); }

}  // namespace sulp
