#pragma once

#include "sulp/linalg.hpp"
#include "sulp/system.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace sulp {

/// Kernel hyperparameters of the GP prior on an impulse response, with the
/// truncated-normal priors placed on them.
struct GPKernelParams {
  double xi = 0.1;        // inverse length-scale
  double varsigma = 0.0;  // decay exponent
  double xi_low = 0.01;
  double xi_high = 1.0;
  double varsigma_low = 0.0;
  double varsigma_high = 10.0;
  double m_xi = 0.1;
  double v_xi = 0.1;
  double m_varsigma = 0.0;
  double v_varsigma = 3.0;

  /// xi in (xi_low, xi_high], varsigma in [varsigma_low, varsigma_high].
  bool in_bounds(double xi_value, double varsigma_value) const;
  /// Log prior density up to a constant; -inf outside the bounds.
  double log_prior(double xi_value, double varsigma_value) const;
};

struct KernelMatrix {
  MatrixXd k;
  Cholesky chol;
};

/// K[i,j] = (d_i d_j)^{varsigma/2} exp(-xi (i-j)^2 / 2) with d_i = (H+1-i)/H
/// for i = 1..H. No factorization.
MatrixXd gp_kernel_matrix(Index horizons, double xi, double varsigma);

/// Kernel plus its jittered Cholesky factor. Throws NumericalError::KernelNotPD.
KernelMatrix gp_kernel(Index horizons, double xi, double varsigma);

/// Normal-Gamma hierarchy. lambda2 holds local scales such that the prior
/// variance of beta_h is tau2() * lambda2[h], with tau2 = 2 / tau2_tilde.
struct NGParams {
  double a_tau = 0.01;
  double b_tau = 0.01;
  double theta = 0.1;
  double tau2_tilde = 2.0;
  VectorXd lambda2;

  double tau2() const { return 2.0 / tau2_tilde; }
};

VectorXd ng_prior_variance(const NGParams& ng);

struct MinnesotaTightness {
  double kappa_own = 0.04;
  double kappa_cross = 0.0016;
  double kappa_det = 100.0;
};

/// Conjugate prior gamma ~ N(vec(mean), Sigma_u kron diag(variance)).
struct ControlsPrior {
  MatrixXd mean;      // k x H
  VectorXd variance;  // k
  MinnesotaTightness tightness;
};

/// Own lags of the target get kappa_own / p^2, other lags kappa_cross / p^2,
/// contemporaneous and deterministic columns kappa_det. With `levels` set the
/// first own lag has prior mean 1 at every horizon.
ControlsPrior minnesota_controls_prior(const std::vector<ControlColumn>& layout, Index horizons, bool levels,
                                       const MinnesotaTightness& tightness = {});

/// Inverse-Wishart prior IW(s0, S0) on Sigma_u.
struct CovPrior {
  double s0 = 0.0;
  MatrixXd S0;
  double scale = 1.0;
};

CovPrior default_cov_prior(Index horizons, double scale = 1.0);

struct MeasurementPrior {
  double phi_mean = 1.0;
  double phi_var = 1.0;
  bool phi_positive = true;
  double delta_var = 10.0;
  double a_nu = 3.0;
  double b_nu = 3.0;
  /// IW prior on Sigma_nu. Non-positive s0_nu means n_M + 4 with S0_nu chosen
  /// so the prior mean is b_nu / (a_nu - 1) times the identity.
  double s0_nu = 0.0;
  MatrixXd S0_nu;

  double resolved_s0_nu(Index n_instruments) const;
  MatrixXd resolved_S0_nu(Index n_instruments) const;
};

struct SVPrior {
  double rho_mean = 0.9;
  double rho_var = 0.04;
  double a_vol = 3.0;
  double b_vol = 0.06;
};

enum class IrfPrior {
  GaussianProcess,  // GP mean with NG shrinkage around it
  Flat,             // beta ~ N(0, flat_variance I)
};

struct HyperParams {
  IrfPrior irf_prior = IrfPrior::GaussianProcess;
  double flat_variance = 10.0;
  GPKernelParams kernel;
  NGParams ng;
  MinnesotaTightness minnesota;
  CovPrior cov;
  MeasurementPrior measurement;
  SVPrior sv;
};

HyperParams default_hyperparameters(Index horizons);

nlohmann::json to_json(const HyperParams& hp);

}  // namespace sulp
