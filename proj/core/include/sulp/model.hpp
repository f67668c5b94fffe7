#pragma once

#include "sulp/priors.hpp"
#include "sulp/system.hpp"

namespace sulp {

/// Measurement-equation parameters m_t = Phi x_t + Delta' z_t + nu_t. Each
/// instrument loads on exactly one shock (SULPSystem::instrument_owner).
struct MeasurementState {
  VectorXd phi;        // n_M loadings, positive
  MatrixXd delta;      // k x n_M control coefficients
  VectorXd sigma2_nu;  // n_M; diagonal of Sigma_nu when errors are correlated
  MatrixXd Sigma_nu;   // n_M x n_M, used only with correlated errors
};

/// Log-variance paths of the latent shocks and their AR(1) parameters.
struct SVState {
  MatrixXd logvol;  // T x n_x (columns of observed shocks stay at zero)
  VectorXd rho;     // n_x
  VectorXd vol_var; // n_x, innovation variance of the log-variance
};

/// One full configuration of the parameters. Matrices are stored with the
/// shock index first: beta.row(i) is the IRF to shock i over all horizons.
struct ChainState {
  MatrixXd beta;        // n_x x H
  MatrixXd gamma;       // k x H
  MatrixXd sigma_u;     // H x H
  MatrixXd mu_beta;     // n_x x H, GP mean
  VectorXd xi;          // n_x
  VectorXd varsigma;    // n_x
  VectorXd tau2_tilde;  // n_x
  MatrixXd v_beta;      // n_x x H prior variances tau^2 lambda_h^2
  MeasurementState measurement;
  MatrixXd x;           // T x n_x shock values (observed columns fixed)
  SVState sv;
  MatrixXd y;           // T x H response with imputed missing cells
  double log_lik = 0.0;

  /// Shock variance sigma^2_{x,t}; 1 without stochastic volatility.
  double shock_variance(Index t, Index shock) const;
};

/// Y - X B - Z Gamma on the completed panel.
MatrixXd residuals(const SULPSystem& system, const ChainState& state);

/// sum_t log N(y_t | B' x_t + Gamma' z_t, Sigma_u) on the completed panel,
/// plus the measurement-equation terms when instruments are modeled.
/// Throws NumericalError::NotSPD for an invalid Sigma_u.
double log_pseudo_likelihood(const SULPSystem& system, const ChainState& state);

/// Same as log_pseudo_likelihood but with missing responses integrated out
/// row by row, so only observed cells contribute. This is the quantity
/// stored per draw and used for power-posterior weights.
double log_observed_pseudo_likelihood(const SULPSystem& system, const ChainState& state);
/// As above with precomputed residuals Y - X B - Z Gamma.
double log_observed_pseudo_likelihood(const SULPSystem& system, const ChainState& state, const MatrixXd& resid);

/// log N(m_t | Phi x_t + Delta' z_t, Sigma_nu) summed over t; 0 without
/// instruments.
double log_measurement_likelihood(const SULPSystem& system, const ChainState& state);

/// Share of instrument variance due to the shock at time t:
/// phi^2 s2 / (phi^2 s2 + sigma2_nu) with s2 the shock variance at t.
double relevance_statistic(const SULPSystem& system, const ChainState& state, Index instrument, Index t);
double relevance_statistic(double phi, double shock_variance, double sigma2_nu);

}  // namespace sulp
