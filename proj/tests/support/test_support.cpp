#include "test_support.hpp"

#include <cmath>
#include <sstream>

namespace sulp::testing {

SampleMoments sample_moments(const MatrixXd& draws) {
  const Index n = draws.rows();
  const Index d = draws.cols();
  const double nn = static_cast<double>(n);
  SampleMoments m;
  m.mean = draws.colwise().mean().transpose();
  const MatrixXd c = draws.rowwise() - m.mean.transpose();
  m.cov = c.transpose() * c / (nn - 1.0);
  m.mean_se = (m.cov.diagonal() / nn).cwiseSqrt();
  m.cov_se.resize(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j <= i; ++j) {
      const VectorXd prod = c.col(i).cwiseProduct(c.col(j));
      const double var = (prod.array() - prod.mean()).square().sum() / (nn - 1.0);
      m.cov_se(i, j) = m.cov_se(j, i) = std::sqrt(var / nn);
    }
  return m;
}

std::vector<double> moment_z(const SampleMoments& m, const VectorXd& mean, const MatrixXd& cov) {
  std::vector<double> z;
  for (Index i = 0; i < mean.size(); ++i) z.push_back(std::abs(m.mean[i] - mean[i]) / m.mean_se[i]);
  for (Index i = 0; i < cov.rows(); ++i)
    for (Index j = 0; j <= i; ++j) z.push_back(std::abs(m.cov(i, j) - cov(i, j)) / m.cov_se(i, j));
  return z;
}

double worst_z(const SampleMoments& m, const VectorXd& mean, const MatrixXd& cov, std::string* detail) {
  double worst = 0.0;
  std::ostringstream what;
  for (Index i = 0; i < mean.size(); ++i) {
    const double z = std::abs(m.mean[i] - mean[i]) / m.mean_se[i];
    if (z > worst) {
      worst = z;
      what.str("");
      what << "mean[" << i << "] " << m.mean[i] << " vs " << mean[i];
    }
  }
  for (Index i = 0; i < cov.rows(); ++i)
    for (Index j = 0; j <= i; ++j) {
      const double z = std::abs(m.cov(i, j) - cov(i, j)) / m.cov_se(i, j);
      if (z > worst) {
        worst = z;
        what.str("");
        what << "cov(" << i << "," << j << ") " << m.cov(i, j) << " vs " << cov(i, j);
      }
    }
  if (detail) *detail = what.str();
  return worst;
}

double batch_means_se(const VectorXd& series, Index batches) {
  const Index len = series.size() / batches;
  VectorXd means(batches);
  for (Index b = 0; b < batches; ++b) means[b] = series.segment(b * len, len).mean();
  const double var = (means.array() - means.mean()).square().sum() / static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

MatrixXd random_spd(Index n, Rng& rng, double ridge) {
  const MatrixXd a = rng.normal_matrix(n, n);
  MatrixXd s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += ridge;
  return s;
}

SULPSystem tiny_system(Index T, Index H, Index n_x, Index k, Rng& rng) {
  SULPSystem s;
  s.shocks = rng.normal_matrix(T, n_x);
  s.controls = rng.normal_matrix(T, k);
  if (k > 0) s.controls.col(k - 1).setOnes();
  const MatrixXd beta = rng.normal_matrix(n_x, H);
  const MatrixXd gamma = 0.3 * rng.normal_matrix(k, H);
  s.response = s.shocks * beta + s.controls * gamma + 0.5 * rng.normal_matrix(T, H);
  for (Index i = 0; i < n_x; ++i) s.shock_info.push_back({"x" + std::to_string(i), false, {}});
  for (Index j = 0; j < k; ++j) s.control_layout.push_back({"z" + std::to_string(j), ControlRole::CrossLag, 1});
  for (Index t = 0; t < T; ++t) s.origin_labels.push_back(std::to_string(t));
  s.missing_by_row.assign(static_cast<std::size_t>(T), {});
  s.instruments.resize(T, 0);
  return s;
}

ControlsPrior flat_controls_prior(Index k, Index H, double variance) {
  ControlsPrior p;
  p.mean = MatrixXd::Zero(k, H);
  p.variance = VectorXd::Constant(k, variance);
  return p;
}

}  // namespace sulp::testing
