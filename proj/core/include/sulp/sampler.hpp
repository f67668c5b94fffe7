#pragma once

#include "sulp/linalg.hpp"
#include "sulp/model.hpp"
#include "sulp/priors.hpp"
#include "sulp/rng.hpp"

#include <cstdint>
#include <string>

namespace sulp {

// ---------------------------------------------------------------------------
// Individual conditional draws. These take explicit inputs so they can be
// tested in isolation; the Sampler below wires them together.

/// Gaussian posterior of vec(B') (shock-major: element i*H + h) given
/// ytilde = Y - Z Gamma.
struct BetaPosterior {
  MatrixXd mean;  // n_x x H
  Cholesky precision;
};

BetaPosterior beta_posterior(const MatrixXd& x, const MatrixXd& ytilde, const MatrixXd& sigma_inv,
                             const MatrixXd& prior_mean, const MatrixXd& prior_var);
MatrixXd draw_beta(const BetaPosterior& post, Rng& rng);

/// Matrix-normal posterior of Gamma: N(vec(mean), Sigma_u kron P^{-1}) with
/// P = Z'Z + diag(1/V_gamma).
struct GammaPosterior {
  MatrixXd mean;  // k x H
  Cholesky precision;
};

Cholesky gamma_precision(const MatrixXd& z, const ControlsPrior& prior);
GammaPosterior gamma_posterior(const MatrixXd& z, const MatrixXd& resid, const ControlsPrior& prior);
GammaPosterior gamma_posterior(const Cholesky& precision, const MatrixXd& z, const MatrixXd& resid,
                               const ControlsPrior& prior);
/// Same, from the cross-product Z' (Y - X B) directly.
GammaPosterior gamma_posterior_from_cross(const Cholesky& precision, const MatrixXd& z_resid,
                                          const ControlsPrior& prior);
MatrixXd draw_gamma(const GammaPosterior& post, const Cholesky& sigma_u, Rng& rng);

/// Inverse-Wishart IW(dof, scale): density proportional to
/// |S|^{-(dof+p+1)/2} exp(-tr(scale S^{-1})/2). Mean scale / (dof - p - 1).
MatrixXd sample_inverse_wishart(double dof, const MatrixXd& scale, Rng& rng);

/// Sigma_u ~ IW(s0 + T, S0 + U'U).
MatrixXd draw_sigma_u(const MatrixXd& u, const CovPrior& prior, Rng& rng);
/// Full conditional when the controls prior is scaled by Sigma_u:
/// IW(s0 + T + k, S0 + U'U + (Gamma - M)' V^{-1} (Gamma - M)).
MatrixXd draw_sigma_u(const MatrixXd& u, const MatrixXd& gamma, const ControlsPrior& controls, const CovPrior& prior,
                      Rng& rng);

/// Posterior of the GP mean given beta ~ N(mu, diag(v)), mu ~ N(0, K).
void gp_mean_posterior(const VectorXd& beta, const MatrixXd& k, const VectorXd& v, VectorXd& mean, MatrixXd& cov);
VectorXd draw_gp_mean(const VectorXd& beta, const KernelMatrix& kernel, const VectorXd& v, Rng& rng);

/// log N(beta | 0, K(xi, varsigma) + diag(v)), the GP mean integrated out.
double kernel_log_marginal(const VectorXd& beta, const VectorXd& v, double xi, double varsigma);

/// Random-walk proposal scales and acceptance counts for one shock.
struct KernelMH {
  double step_xi = 0.05;
  double step_varsigma = 0.5;
  std::int64_t proposed_xi = 0;
  std::int64_t accepted_xi = 0;
  std::int64_t proposed_varsigma = 0;
  std::int64_t accepted_varsigma = 0;

  /// Robbins-Monro update of the log step sizes towards `target`.
  void adapt(bool accepted_xi_now, bool accepted_varsigma_now, double target, std::int64_t iteration);
};

/// One Metropolis-Hastings update of xi then varsigma. Returns true for each
/// accepted component in (first, second).
std::pair<bool, bool> draw_kernel_hyper(const VectorXd& beta, const VectorXd& v, const GPKernelParams& prior,
                                        double& xi, double& varsigma, KernelMH& mh, Rng& rng);

/// v_h ~ GIG(theta - 1/2, (beta_h - mu_h)^2, theta tau2_tilde). Returns the
/// prior variances v (= tau^2 lambda_h^2).
VectorXd draw_ng_locals(const VectorXd& beta, const VectorXd& mu, double theta, double tau2_tilde, Rng& rng);
/// tau2_tilde ~ Gamma(a_tau + theta H, b_tau + theta/2 sum v).
double draw_ng_global(const VectorXd& v, const NGParams& prior, Rng& rng);

/// Latent shocks, one Gaussian draw per t given everything else.
void draw_latent_shocks(const SULPSystem& system, ChainState& state, Rng& rng);

/// (phi, delta) per instrument from the truncated Gaussian regression
/// posterior, then sigma2_nu (or Sigma_nu with correlated errors).
void draw_measurement_params(const SULPSystem& system, ChainState& state, const MeasurementPrior& prior, Rng& rng);

/// Log-volatility path and (rho, vol_var) of one latent shock.
void draw_sv(ChainState& state, Index shock, const SVPrior& prior, Rng& rng);

/// Forward-filter backward-sample of h_t in y*_t = h_t + e_t (mixture
/// component means and variances given per t), h_t = rho h_{t-1} + u_t.
VectorXd ffbs_logvol(const VectorXd& ystar, const VectorXd& mix_mean, const VectorXd& mix_var, double rho,
                     double vol_var, Rng& rng);

/// Imputes the missing response cells from their conditional Gaussians.
void draw_missing(const SULPSystem& system, ChainState& state, Rng& rng);

// ---------------------------------------------------------------------------

struct SamplerConfig {
  int n_draws = 12000;
  int burn_in = 3000;
  int thin = 3;
  double mh_step_xi = 0.05;
  double mh_step_varsigma = 0.5;
  double adapt_target = 0.30;
  std::uint64_t seed = 0;
  bool store_gamma = true;
  bool store_latent = true;

  /// Throws DataError::InvalidSpec on violated invariants.
  void validate() const;
  int stored_draws() const;
};

/// Thinned post-burn-in draws. Each matrix has one row per stored draw.
struct Chain {
  Index n_shocks = 0;
  Index horizons = 0;
  Index n_controls = 0;
  Index rows = 0;
  Index n_instruments = 0;
  std::uint64_t seed = 0;

  MatrixXd beta;        // n_x * H, shock-major
  MatrixXd mu_beta;     // n_x * H
  MatrixXd xi;          // n_x
  MatrixXd varsigma;    // n_x
  MatrixXd tau2_tilde;  // n_x
  MatrixXd v_beta;      // n_x * H
  MatrixXd sigma_u;     // H * H, column-major
  MatrixXd gamma;       // k * H, column-major; empty unless stored
  MatrixXd phi;         // n_M
  MatrixXd sigma2_nu;   // n_M
  MatrixXd x;           // T * n_x, column-major; empty unless stored
  MatrixXd logvol;      // T * n_x, column-major; empty unless stored
  VectorXd log_lik;

  VectorXd acceptance_xi;
  VectorXd acceptance_varsigma;

  Index draws() const { return log_lik.size(); }
  /// Row `draw` of beta reshaped to n_x x H.
  MatrixXd beta_draw(Index draw) const;
};

class Sampler {
 public:
  Sampler(SULPSystem system, HyperParams priors, ControlsPrior controls, SamplerConfig config);

  /// Ridge starting values; see the README for the exact rules.
  void initialize();
  /// One full Gibbs sweep. Step sizes adapt when `adapt` is set.
  void sweep(Rng& rng, bool adapt);
  /// Run burn-in and sampling from the current state.
  Chain run(Rng& rng);

  const ChainState& state() const { return state_; }
  ChainState& mutable_state() { return state_; }
  const SULPSystem& system() const { return system_; }
  const std::vector<KernelMH>& kernel_mh() const { return mh_; }

  /// Overwrite the response panel (all cells treated as observed values).
  void replace_response(const MatrixXd& y);

 private:
  void step_coefficients(Rng& rng);
  void step_covariances(Rng& rng);
  void step_irf_prior(Rng& rng, bool adapt);
  void step_latent(Rng& rng);
  void refresh_caches();

  SULPSystem system_;
  HyperParams priors_;
  ControlsPrior controls_;
  SamplerConfig config_;
  ChainState state_;
  std::vector<KernelMH> mh_;
  Cholesky gamma_precision_;
  MatrixXd zty_;     // Z' Y on the completed panel
  MatrixXd zgamma_;  // Z Gamma for the current Gamma
  std::int64_t iteration_ = 0;
};

Chain run_sampler(const SULPSystem& system, const HyperParams& priors, const ControlsPrior& controls,
                  const SamplerConfig& config);

}  // namespace sulp
