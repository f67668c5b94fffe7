#pragma once

#include <sulp/priors.hpp>
#include <sulp/rng.hpp>
#include <sulp/system.hpp>

#include <string>
#include <vector>

namespace sulp::testing {

/// Sample moments of the rows of `draws` (n x d) with Monte Carlo standard
/// errors for the mean and for each covariance entry (iid draws).
struct SampleMoments {
  VectorXd mean;
  VectorXd mean_se;
  MatrixXd cov;
  MatrixXd cov_se;
};

SampleMoments sample_moments(const MatrixXd& draws);

/// |estimate - expected| / se for every mean and lower-triangle covariance entry.
std::vector<double> moment_z(const SampleMoments& m, const VectorXd& mean, const MatrixXd& cov);

/// Largest |estimate - expected| / se over all means and covariance entries.
/// `detail` receives a description of the worst entry.
double worst_z(const SampleMoments& m, const VectorXd& mean, const MatrixXd& cov, std::string* detail = nullptr);

/// Batch-means standard error of the mean of a correlated series.
double batch_means_se(const VectorXd& series, Index batches = 50);

MatrixXd random_spd(Index n, Rng& rng, double ridge = 0.5);

/// Small observed-shock system with Gaussian regressors and no missing cells.
/// The response is drawn from the model at the given parameters.
SULPSystem tiny_system(Index T, Index H, Index n_x, Index k, Rng& rng);

/// Controls prior with zero mean and constant variance.
ControlsPrior flat_controls_prior(Index k, Index H, double variance);

}  // namespace sulp::testing
