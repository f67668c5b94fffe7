#include "sulp/errors.hpp"
#include "sulp/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace sulp {
namespace {

template <class F>
void run_step(const char* name, std::int64_t sweep, F&& f) {
  try {
    f();
  } catch (const NumericalError& e) {
    throw NumericalError(NumericalError::Kind::SamplerFailure,
                         "sweep " + std::to_string(sweep) + ", step " + name + ": " + e.what());
  }
}

void flatten_into(MatrixXd& dst, Index row, const MatrixXd& src) {
  dst.row(row) = Eigen::Map<const VectorXd>(src.data(), src.size()).transpose();
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_draws < 1 || burn_in < 0 || burn_in >= n_draws)
    throw DataError(DataError::Kind::InvalidSpec, "sampler: need 0 <= burn_in < n_draws");
  if (thin < 1) throw DataError(DataError::Kind::InvalidSpec, "sampler: thin must be at least 1");
  if (!(mh_step_xi > 0.0 && mh_step_varsigma > 0.0))
    throw DataError(DataError::Kind::InvalidSpec, "sampler: MH step sizes must be positive");
  if (!(adapt_target > 0.0 && adapt_target < 1.0))
    throw DataError(DataError::Kind::InvalidSpec, "sampler: adapt_target must lie in (0, 1)");
}

int SamplerConfig::stored_draws() const { return (n_draws - burn_in) / thin; }

MatrixXd Chain::beta_draw(Index draw) const {
  MatrixXd b(n_shocks, horizons);
  for (Index i = 0; i < n_shocks; ++i)
    for (Index h = 0; h < horizons; ++h) b(i, h) = beta(draw, i * horizons + h);
  return b;
}

Sampler::Sampler(SULPSystem system, HyperParams priors, ControlsPrior controls, SamplerConfig config)
    : system_(std::move(system)), priors_(std::move(priors)), controls_(std::move(controls)), config_(config) {
  config_.validate();
  const Index H = system_.horizons();
  if (priors_.cov.S0.rows() != H) priors_.cov = default_cov_prior(H, priors_.cov.scale);
  if (controls_.variance.size() != system_.n_controls() || controls_.mean.cols() != H)
    throw DataError(DataError::Kind::InvalidSpec, "controls prior does not match the design");
  if (system_.n_controls() > 0) gamma_precision_ = gamma_precision(system_.controls, controls_);
  mh_.assign(system_.n_shocks(), KernelMH{config_.mh_step_xi, config_.mh_step_varsigma});
  initialize();
}

void Sampler::initialize() {
  const Index T = system_.rows();
  const Index H = system_.horizons();
  const Index n_x = system_.n_shocks();
  const Index k = system_.n_controls();
  const Index n_m = system_.n_instruments();
  ChainState& s = state_;

  s.y = system_.response;
  for (Index h = 0; h < H; ++h) {
    double sum = 0.0;
    Index n = 0;
    for (Index t = 0; t < T; ++t) {
      if (std::isnan(s.y(t, h))) continue;
      sum += s.y(t, h);
      ++n;
    }
    const double fill = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (Index t = 0; t < T; ++t)
      if (std::isnan(s.y(t, h))) s.y(t, h) = fill;
  }
  s.x = system_.shocks;

  // Ridge (lambda = 1) fit of the completed panel on [X Z].
  MatrixXd w(T, n_x + k);
  w.leftCols(n_x) = s.x;
  if (k > 0) w.rightCols(k) = system_.controls;
  MatrixXd gram = w.transpose() * w;
  gram.diagonal().array() += 1.0;
  const MatrixXd coef = cholesky(gram).solve(MatrixXd(w.transpose() * s.y));
  s.beta = coef.topRows(n_x);
  s.gamma = coef.bottomRows(k);
  const MatrixXd u = s.y - w * coef;
  s.sigma_u = u.transpose() * u / static_cast<double>(T);
  s.sigma_u.diagonal().array() += 0.1;

  const auto& kp = priors_.kernel;
  const double xi0 = std::clamp(kp.m_xi, kp.xi_low + 1e-6, kp.xi_high);
  const double vs0 = std::clamp(kp.m_varsigma, kp.varsigma_low, kp.varsigma_high);
  s.xi = VectorXd::Constant(n_x, xi0);
  s.varsigma = VectorXd::Constant(n_x, vs0);
  s.tau2_tilde = VectorXd::Constant(n_x, 2.0);
  s.mu_beta = MatrixXd::Zero(n_x, H);
  if (priors_.irf_prior == IrfPrior::Flat)
    s.v_beta = MatrixXd::Constant(n_x, H, priors_.flat_variance);
  else
    s.v_beta = MatrixXd::Ones(n_x, H);

  auto& ms = s.measurement;
  ms.phi = VectorXd::Ones(n_m);
  ms.delta = MatrixXd::Zero(k, n_m);
  ms.sigma2_nu = VectorXd::Ones(n_m);
  ms.Sigma_nu = MatrixXd::Identity(n_m, n_m);

  s.sv.logvol = MatrixXd::Zero(T, n_x);
  s.sv.rho = VectorXd::Constant(n_x, priors_.sv.rho_mean);
  s.sv.vol_var = VectorXd::Constant(n_x, priors_.sv.b_vol / (priors_.sv.a_vol - 1.0));

  refresh_caches();
  s.log_lik = log_observed_pseudo_likelihood(system_, s);
  iteration_ = 0;
}

void Sampler::refresh_caches() {
  if (system_.n_controls() > 0) {
    zty_ = system_.controls.transpose() * state_.y;
    zgamma_ = system_.controls * state_.gamma;
  } else {
    zty_.resize(0, system_.horizons());
    zgamma_ = MatrixXd::Zero(system_.rows(), system_.horizons());
  }
}

void Sampler::replace_response(const MatrixXd& y) {
  system_.response = y;
  state_.y = y;
  refresh_caches();
}

void Sampler::step_coefficients(Rng& rng) {
  ChainState& s = state_;
  const Cholesky su = cholesky(s.sigma_u);
  s.beta = draw_beta(beta_posterior(s.x, s.y - zgamma_, su.inverse(), s.mu_beta, s.v_beta), rng);
  if (system_.n_controls() > 0) {
    const MatrixXd cross = zty_ - (system_.controls.transpose() * s.x) * s.beta;
    s.gamma = draw_gamma(gamma_posterior_from_cross(gamma_precision_, cross, controls_), su, rng);
    zgamma_.noalias() = system_.controls * s.gamma;
  }
}

void Sampler::step_covariances(Rng& rng) {
  ChainState& s = state_;
  s.sigma_u = draw_sigma_u(s.y - s.x * s.beta - zgamma_, s.gamma, controls_, priors_.cov, rng);
  draw_measurement_params(system_, s, priors_.measurement, rng);
}

void Sampler::step_irf_prior(Rng& rng, bool adapt) {
  if (priors_.irf_prior == IrfPrior::Flat) return;
  ChainState& s = state_;
  const Index H = system_.horizons();
  for (Index i = 0; i < system_.n_shocks(); ++i) {
    const VectorXd beta = s.beta.row(i).transpose();
    VectorXd v = s.v_beta.row(i).transpose();
    const auto accepted = draw_kernel_hyper(beta, v, priors_.kernel, s.xi[i], s.varsigma[i], mh_[i], rng);
    if (adapt) mh_[i].adapt(accepted.first, accepted.second, config_.adapt_target, iteration_);
    const KernelMatrix kernel = gp_kernel(H, s.xi[i], s.varsigma[i]);
    const VectorXd mu = draw_gp_mean(beta, kernel, v, rng);
    s.mu_beta.row(i) = mu.transpose();
    v = draw_ng_locals(beta, mu, priors_.ng.theta, s.tau2_tilde[i], rng);
    s.v_beta.row(i) = v.transpose();
    s.tau2_tilde[i] = draw_ng_global(v, priors_.ng, rng);
  }
}

void Sampler::step_latent(Rng& rng) {
  ChainState& s = state_;
  if (system_.has_latent_shocks()) {
    draw_latent_shocks(system_, s, rng);
    if (system_.stochastic_volatility) {
      for (Index i = 0; i < system_.n_shocks(); ++i)
        if (system_.shock_info[i].latent) draw_sv(s, i, priors_.sv, rng);
    }
  }
  if (system_.missing_count() == 0) return;
  const MatrixXd before = s.y;
  draw_missing(system_, s, rng);
  if (system_.n_controls() == 0) return;
  for (Index t = 0; t < system_.rows(); ++t) {
    if (system_.missing_by_row[t].empty()) continue;
    zty_.noalias() += system_.controls.row(t).transpose() * (s.y.row(t) - before.row(t));
  }
}

void Sampler::sweep(Rng& rng, bool adapt) {
  const std::int64_t n = iteration_;
  run_step("coefficients", n, [&] { step_coefficients(rng); });
  run_step("covariances", n, [&] { step_covariances(rng); });
  run_step("irf_prior", n, [&] { step_irf_prior(rng, adapt); });
  run_step("latent", n, [&] { step_latent(rng); });
  run_step("likelihood", n, [&] {
    state_.log_lik = log_observed_pseudo_likelihood(system_, state_, state_.y - state_.x * state_.beta - zgamma_);
  });
  if (!std::isfinite(state_.log_lik))
    throw NumericalError(NumericalError::Kind::SamplerFailure,
                         "sweep " + std::to_string(n) + ": non-finite log pseudo-likelihood");
  ++iteration_;
}

Chain Sampler::run(Rng& rng) {
  const Index n_x = system_.n_shocks();
  const Index H = system_.horizons();
  const Index k = system_.n_controls();
  const Index T = system_.rows();
  const Index n_m = system_.n_instruments();
  const Index S = config_.stored_draws();
  const bool latent = system_.has_latent_shocks();

  Chain chain;
  chain.n_shocks = n_x;
  chain.horizons = H;
  chain.n_controls = k;
  chain.rows = T;
  chain.n_instruments = n_m;
  chain.seed = config_.seed;
  chain.beta.resize(S, n_x * H);
  chain.mu_beta.resize(S, n_x * H);
  chain.v_beta.resize(S, n_x * H);
  chain.xi.resize(S, n_x);
  chain.varsigma.resize(S, n_x);
  chain.tau2_tilde.resize(S, n_x);
  chain.sigma_u.resize(S, H * H);
  chain.phi.resize(S, n_m);
  chain.sigma2_nu.resize(S, n_m);
  chain.log_lik.resize(S);
  if (config_.store_gamma) chain.gamma.resize(S, k * H);
  if (config_.store_latent && latent) {
    chain.x.resize(S, T * n_x);
    chain.logvol.resize(S, T * n_x);
  }

  Index stored = 0;
  for (int sweep_index = 0; sweep_index < config_.n_draws; ++sweep_index) {
    const bool burning = sweep_index < config_.burn_in;
    sweep(rng, burning);
    if (burning || (sweep_index - config_.burn_in + 1) % config_.thin != 0 || stored >= S) continue;
    const ChainState& s = state_;
    flatten_into(chain.beta, stored, MatrixXd(s.beta.transpose()));
    flatten_into(chain.mu_beta, stored, MatrixXd(s.mu_beta.transpose()));
    flatten_into(chain.v_beta, stored, MatrixXd(s.v_beta.transpose()));
    chain.xi.row(stored) = s.xi.transpose();
    chain.varsigma.row(stored) = s.varsigma.transpose();
    chain.tau2_tilde.row(stored) = s.tau2_tilde.transpose();
    flatten_into(chain.sigma_u, stored, s.sigma_u);
    chain.phi.row(stored) = s.measurement.phi.transpose();
    chain.sigma2_nu.row(stored) = s.measurement.sigma2_nu.transpose();
    chain.log_lik[stored] = s.log_lik;
    if (config_.store_gamma) flatten_into(chain.gamma, stored, s.gamma);
    if (chain.x.size() > 0) {
      flatten_into(chain.x, stored, s.x);
      flatten_into(chain.logvol, stored, s.sv.logvol);
    }
    ++stored;
  }

  chain.acceptance_xi.resize(n_x);
  chain.acceptance_varsigma.resize(n_x);
  for (Index i = 0; i < n_x; ++i) {
    const auto& m = mh_[i];
    chain.acceptance_xi[i] = m.proposed_xi > 0 ? static_cast<double>(m.accepted_xi) / m.proposed_xi : 0.0;
    chain.acceptance_varsigma[i] =
        m.proposed_varsigma > 0 ? static_cast<double>(m.accepted_varsigma) / m.proposed_varsigma : 0.0;
  }
  return chain;
}

Chain run_sampler(const SULPSystem& system, const HyperParams& priors, const ControlsPrior& controls,
                  const SamplerConfig& config) {
  Rng rng(config.seed, {0x51a});
  Sampler sampler(system, priors, controls, config);
  return sampler.run(rng);
}

}  // namespace sulp
