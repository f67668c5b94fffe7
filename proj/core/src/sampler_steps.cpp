#include "sulp/errors.hpp"
#include "sulp/gig.hpp"
#include "sulp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sulp {
namespace {

constexpr double kMinVariance = 1e-10;
constexpr double kMaxVariance = 1e10;

// x = mean + L'^{-1} z draws from N(mean, (L L')^{-1}).
VectorXd precision_draw(const Cholesky& precision, Rng& rng) {
  const VectorXd z = rng.normal_vector(precision.lower.rows());
  return precision.lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

}  // namespace

BetaPosterior beta_posterior(const MatrixXd& x, const MatrixXd& ytilde, const MatrixXd& sigma_inv,
                             const MatrixXd& prior_mean, const MatrixXd& prior_var) {
  const Index n_x = x.cols();
  const Index H = ytilde.cols();
  const Index n = n_x * H;
  const MatrixXd xtx = x.transpose() * x;
  MatrixXd precision(n, n);
  for (Index i = 0; i < n_x; ++i)
    for (Index j = 0; j < n_x; ++j) precision.block(i * H, j * H, H, H) = xtx(i, j) * sigma_inv;

  const MatrixXd cross = sigma_inv * (ytilde.transpose() * x);  // H x n_x
  VectorXd rhs(n);
  for (Index i = 0; i < n_x; ++i) {
    for (Index h = 0; h < H; ++h) {
      const double v = std::max(prior_var(i, h), kMinVariance);
      precision(i * H + h, i * H + h) += 1.0 / v;
      rhs[i * H + h] = cross(h, i) + prior_mean(i, h) / v;
    }
  }
  BetaPosterior post;
  try {
    post.precision = cholesky(precision);
  } catch (const NumericalError&) {
    throw NumericalError(NumericalError::Kind::Singular, "beta posterior precision is singular");
  }
  const VectorXd mean = post.precision.solve(rhs);
  post.mean = Eigen::Map<const MatrixXd>(mean.data(), H, n_x).transpose();
  return post;
}

MatrixXd draw_beta(const BetaPosterior& post, Rng& rng) {
  const Index n_x = post.mean.rows();
  const Index H = post.mean.cols();
  const VectorXd dev = precision_draw(post.precision, rng);
  return post.mean + Eigen::Map<const MatrixXd>(dev.data(), H, n_x).transpose();
}

Cholesky gamma_precision(const MatrixXd& z, const ControlsPrior& prior) {
  MatrixXd p = z.transpose() * z;
  p.diagonal() += prior.variance.cwiseInverse();
  try {
    return cholesky(p);
  } catch (const NumericalError&) {
    throw NumericalError(NumericalError::Kind::Singular, "Z'Z + V_gamma^{-1} is singular");
  }
}

GammaPosterior gamma_posterior(const MatrixXd& z, const MatrixXd& resid, const ControlsPrior& prior) {
  return gamma_posterior(gamma_precision(z, prior), z, resid, prior);
}

GammaPosterior gamma_posterior(const Cholesky& precision, const MatrixXd& z, const MatrixXd& resid,
                               const ControlsPrior& prior) {
  return gamma_posterior_from_cross(precision, z.transpose() * resid, prior);
}

GammaPosterior gamma_posterior_from_cross(const Cholesky& precision, const MatrixXd& z_resid,
                                          const ControlsPrior& prior) {
  MatrixXd rhs = z_resid;
  rhs += prior.variance.cwiseInverse().asDiagonal() * prior.mean;
  return GammaPosterior{precision.solve(rhs), precision};
}

MatrixXd draw_gamma(const GammaPosterior& post, const Cholesky& sigma_u, Rng& rng) {
  const Index k = post.mean.rows();
  if (k == 0) return post.mean;
  const MatrixXd e = rng.normal_matrix(k, post.mean.cols());
  const MatrixXd left = post.precision.lower.transpose().triangularView<Eigen::Upper>().solve(e);
  return post.mean + left * sigma_u.lower.transpose();
}

MatrixXd sample_inverse_wishart(double dof, const MatrixXd& scale, Rng& rng) {
  const Index p = scale.rows();
  if (!(dof > static_cast<double>(p) - 1.0))
    throw NumericalError(NumericalError::Kind::Degenerate, "inverse-Wishart degrees of freedom too small");
  Cholesky l;
  try {
    l = cholesky(scale);
  } catch (const NumericalError&) {
    throw NumericalError(NumericalError::Kind::NotSPD, "inverse-Wishart scale matrix is not positive definite");
  }
  // Bartlett factor A of a Wishart(dof, I); Sigma = L A'^{-1} A^{-1} L'.
  MatrixXd a = MatrixXd::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const MatrixXd ainv_t = a.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p, p));
  const MatrixXd g = l.lower * ainv_t;
  MatrixXd sigma = g * g.transpose();
  symmetrize(sigma);
  return sigma;
}

MatrixXd draw_sigma_u(const MatrixXd& u, const CovPrior& prior, Rng& rng) {
  MatrixXd scale = prior.S0;
  if (u.rows() > 0) scale.noalias() += u.transpose() * u;
  return sample_inverse_wishart(prior.s0 + static_cast<double>(u.rows()), scale, rng);
}

MatrixXd draw_sigma_u(const MatrixXd& u, const MatrixXd& gamma, const ControlsPrior& controls, const CovPrior& prior,
                      Rng& rng) {
  MatrixXd scale = prior.S0;
  if (u.rows() > 0) scale.noalias() += u.transpose() * u;
  if (gamma.rows() > 0) {
    const MatrixXd dev = gamma - controls.mean;
    scale.noalias() += dev.transpose() * controls.variance.cwiseInverse().asDiagonal() * dev;
  }
  const double dof = prior.s0 + static_cast<double>(u.rows()) + static_cast<double>(gamma.rows());
  return sample_inverse_wishart(dof, scale, rng);
}

void gp_mean_posterior(const VectorXd& beta, const MatrixXd& k, const VectorXd& v, VectorXd& mean, MatrixXd& cov) {
  MatrixXd kv = k;
  kv.diagonal() += v;
  const Cholesky c = cholesky_jittered(kv);
  mean = k * c.solve(beta);
  cov = k - k * c.solve(k);
  symmetrize(cov);
}

VectorXd draw_gp_mean(const VectorXd& beta, const KernelMatrix& kernel, const VectorXd& v, Rng& rng) {
  // Matheron's rule: perturb a joint prior draw towards the data.
  const Index H = beta.size();
  const VectorXd f = kernel.chol.lower * rng.normal_vector(H);
  VectorXd e(H);
  for (Index h = 0; h < H; ++h) e[h] = std::sqrt(v[h]) * rng.normal();
  MatrixXd kv = kernel.k;
  kv.diagonal() += v;
  const Cholesky c = cholesky_jittered(kv);
  return f + kernel.k * c.solve(VectorXd(beta - f - e));
}

double kernel_log_marginal(const VectorXd& beta, const VectorXd& v, double xi, double varsigma) {
  MatrixXd kv = gp_kernel_matrix(beta.size(), xi, varsigma);
  kv.diagonal() += v;
  return mvn_log_density(beta, VectorXd::Zero(beta.size()), cholesky_jittered(kv));
}

void KernelMH::adapt(bool accepted_xi_now, bool accepted_varsigma_now, double target, std::int64_t iteration) {
  const double rate = 1.0 / std::pow(static_cast<double>(iteration) + 10.0, 0.6);
  step_xi *= std::exp(rate * ((accepted_xi_now ? 1.0 : 0.0) - target));
  step_varsigma *= std::exp(rate * ((accepted_varsigma_now ? 1.0 : 0.0) - target));
  step_xi = std::clamp(step_xi, 1e-4, 10.0);
  step_varsigma = std::clamp(step_varsigma, 1e-3, 50.0);
}

std::pair<bool, bool> draw_kernel_hyper(const VectorXd& beta, const VectorXd& v, const GPKernelParams& prior,
                                        double& xi, double& varsigma, KernelMH& mh, Rng& rng) {
  double current = kernel_log_marginal(beta, v, xi, varsigma) + prior.log_prior(xi, varsigma);

  auto attempt = [&](double prop_xi, double prop_varsigma) {
    if (!prior.in_bounds(prop_xi, prop_varsigma)) return false;
    double proposed = -std::numeric_limits<double>::infinity();
    try {
      proposed = kernel_log_marginal(beta, v, prop_xi, prop_varsigma) + prior.log_prior(prop_xi, prop_varsigma);
    } catch (const NumericalError&) {
      return false;
    }
    if (std::log(rng.uniform()) < proposed - current) {
      xi = prop_xi;
      varsigma = prop_varsigma;
      current = proposed;
      return true;
    }
    return false;
  };

  ++mh.proposed_xi;
  const bool acc_xi = attempt(xi + mh.step_xi * rng.normal(), varsigma);
  if (acc_xi) ++mh.accepted_xi;
  ++mh.proposed_varsigma;
  const bool acc_vs = attempt(xi, varsigma + mh.step_varsigma * rng.normal());
  if (acc_vs) ++mh.accepted_varsigma;
  return {acc_xi, acc_vs};
}

VectorXd draw_ng_locals(const VectorXd& beta, const VectorXd& mu, double theta, double tau2_tilde, Rng& rng) {
  VectorXd v(beta.size());
  for (Index h = 0; h < beta.size(); ++h) {
    const double dev = beta[h] - mu[h];
    v[h] = std::clamp(sample_gig(theta - 0.5, dev * dev, theta * tau2_tilde, rng), kMinVariance, kMaxVariance);
  }
  return v;
}

double draw_ng_global(const VectorXd& v, const NGParams& prior, Rng& rng) {
  const double shape = prior.a_tau + prior.theta * static_cast<double>(v.size());
  const double rate = prior.b_tau + 0.5 * prior.theta * v.sum();
  return std::max(rng.gamma(shape, rate), 1e-300);
}

void draw_latent_shocks(const SULPSystem& system, ChainState& state, Rng& rng) {
  std::vector<Index> latent;
  std::vector<Index> observed;
  for (Index i = 0; i < system.n_shocks(); ++i) (system.shock_info[i].latent ? latent : observed).push_back(i);
  if (latent.empty()) return;
  const Index n_l = static_cast<Index>(latent.size());
  const Index n_m = system.n_instruments();
  const Index T = system.rows();
  const Index H = system.horizons();

  std::vector<Index> position(system.n_shocks(), -1);
  for (Index a = 0; a < n_l; ++a) position[latent[a]] = a;

  MatrixXd b_l(n_l, H);
  for (Index a = 0; a < n_l; ++a) b_l.row(a) = state.beta.row(latent[a]);
  MatrixXd ry = state.y;
  if (system.n_controls() > 0) ry.noalias() -= system.controls * state.gamma;
  for (Index i : observed) ry -= state.x.col(i) * state.beta.row(i);

  const Cholesky su = cholesky(state.sigma_u);
  const MatrixXd su_inv_bt = su.solve(MatrixXd(b_l.transpose()));  // H x n_l
  const MatrixXd from_y = b_l * su_inv_bt;

  MatrixXd phi = MatrixXd::Zero(n_m, n_l);
  for (Index j = 0; j < n_m; ++j) phi(j, position[system.instrument_owner(j)]) = state.measurement.phi[j];
  MatrixXd nu_inv;
  if (system.correlated_measurement_errors)
    nu_inv = cholesky(state.measurement.Sigma_nu).inverse();
  else
    nu_inv = state.measurement.sigma2_nu.cwiseInverse().asDiagonal();
  const MatrixXd phi_t_nu_inv = phi.transpose() * nu_inv;  // n_l x n_m
  const MatrixXd from_m = phi_t_nu_inv * phi;

  MatrixXd rm = system.instruments;
  if (system.n_controls() > 0 && n_m > 0) rm.noalias() -= system.controls * state.measurement.delta;

  // rhs_t = Phi' Sigma_nu^{-1} r_m,t + B_L Sigma_u^{-1} r_y,t, all t at once.
  MatrixXd rhs = ry * su_inv_bt;
  if (n_m > 0) rhs.noalias() += rm * phi_t_nu_inv.transpose();

  MatrixXd precision(n_l, n_l);
  for (Index t = 0; t < T; ++t) {
    precision = from_y + from_m;
    for (Index a = 0; a < n_l; ++a) precision(a, a) += 1.0 / state.shock_variance(t, latent[a]);
    const Cholesky c = cholesky(precision);
    const VectorXd draw = c.solve(VectorXd(rhs.row(t).transpose())) + precision_draw(c, rng);
    for (Index a = 0; a < n_l; ++a) state.x(t, latent[a]) = draw[a];
  }
}

void draw_measurement_params(const SULPSystem& system, ChainState& state, const MeasurementPrior& prior, Rng& rng) {
  const Index n_m = system.n_instruments();
  if (n_m == 0) return;
  const Index T = system.rows();
  const Index k = system.n_controls();
  auto& ms = state.measurement;
  const bool correlated = system.correlated_measurement_errors;

  auto residual = [&](Index j) -> VectorXd {
    VectorXd r = system.instruments.col(j) - ms.phi[j] * state.x.col(system.instrument_owner(j));
    if (k > 0) r.noalias() -= system.controls * ms.delta.col(j);
    return r;
  };

  MatrixXd nu(T, n_m);
  for (Index j = 0; j < n_m; ++j) nu.col(j) = residual(j);

  VectorXd prior_prec(k + 1);
  prior_prec[0] = 1.0 / prior.phi_var;
  prior_prec.tail(k).setConstant(1.0 / prior.delta_var);

  for (Index j = 0; j < n_m; ++j) {
    // With correlated errors condition on the other equations' residuals.
    VectorXd target = system.instruments.col(j);
    double noise = correlated ? ms.Sigma_nu(j, j) : ms.sigma2_nu[j];
    if (correlated && n_m > 1) {
      std::vector<Index> others;
      for (Index o = 0; o < n_m; ++o)
        if (o != j) others.push_back(o);
      const Index n_o = static_cast<Index>(others.size());
      MatrixXd s_oo(n_o, n_o);
      VectorXd s_oj(n_o);
      MatrixXd nu_o(T, n_o);
      for (Index a = 0; a < n_o; ++a) {
        s_oj[a] = ms.Sigma_nu(others[a], j);
        nu_o.col(a) = nu.col(others[a]);
        for (Index b = 0; b < n_o; ++b) s_oo(a, b) = ms.Sigma_nu(others[a], others[b]);
      }
      const VectorXd coef = cholesky(s_oo).solve(s_oj);
      target -= nu_o * coef;
      noise -= s_oj.dot(coef);
    }

    MatrixXd w(T, k + 1);
    w.col(0) = state.x.col(system.instrument_owner(j));
    if (k > 0) w.rightCols(k) = system.controls;
    MatrixXd precision = w.transpose() * w / noise;
    precision.diagonal() += prior_prec;
    VectorXd rhs = w.transpose() * target / noise;
    rhs[0] += prior.phi_mean / prior.phi_var;
    const Cholesky c = cholesky(precision);
    const VectorXd mean = c.solve(rhs);
    const MatrixXd cov = c.inverse();

    const double lower = prior.phi_positive ? 0.0 : -std::numeric_limits<double>::infinity();
    const double phi = truncated_normal(mean[0], std::sqrt(cov(0, 0)), lower, std::numeric_limits<double>::infinity(), rng);
    ms.phi[j] = phi;
    if (k > 0) {
      // delta | phi from the joint Gaussian, in precision form.
      const MatrixXd p_dd = precision.bottomRightCorner(k, k);
      const VectorXd p_dphi = precision.block(1, 0, k, 1);
      const Cholesky cd = cholesky(p_dd);
      const VectorXd cmean = mean.tail(k) - cd.solve(VectorXd(p_dphi * (phi - mean[0])));
      ms.delta.col(j) = cmean + precision_draw(cd, rng);
    }
    nu.col(j) = residual(j);

    if (!correlated) {
      const double shape = prior.a_nu + 0.5 * static_cast<double>(T);
      const double scale = prior.b_nu + 0.5 * nu.col(j).squaredNorm();
      ms.sigma2_nu[j] = std::max(rng.inverse_gamma(shape, scale), kMinVariance);
    }
  }

  if (correlated) {
    MatrixXd scale = prior.resolved_S0_nu(n_m) + nu.transpose() * nu;
    ms.Sigma_nu = sample_inverse_wishart(prior.resolved_s0_nu(n_m) + static_cast<double>(T), scale, rng);
    ms.sigma2_nu = ms.Sigma_nu.diagonal();
  }
}

void draw_missing(const SULPSystem& system, ChainState& state, Rng& rng) {
  const Index T = system.rows();
  const Index H = system.horizons();
  bool any = false;
  for (const auto& row : system.missing_by_row) any = any || !row.empty();
  if (!any) return;

  const MatrixXd omega = cholesky(state.sigma_u).inverse();
  for (Index t = 0; t < T; ++t) {
    const auto& miss = system.missing_by_row[t];
    if (miss.empty()) continue;
    VectorXd fit = state.beta.transpose() * state.x.row(t).transpose();
    if (system.n_controls() > 0) fit.noalias() += state.gamma.transpose() * system.controls.row(t).transpose();

    const Index n_miss = static_cast<Index>(miss.size());
    std::vector<bool> is_missing(H, false);
    for (Index h : miss) is_missing[h] = true;
    std::vector<Index> obs;
    for (Index h = 0; h < H; ++h)
      if (!is_missing[h]) obs.push_back(h);

    MatrixXd o_mm(n_miss, n_miss);
    for (Index a = 0; a < n_miss; ++a)
      for (Index b = 0; b < n_miss; ++b) o_mm(a, b) = omega(miss[a], miss[b]);
    VectorXd shift = VectorXd::Zero(n_miss);
    for (Index a = 0; a < n_miss; ++a)
      for (Index h : obs) shift[a] += omega(miss[a], h) * (state.y(t, h) - fit[h]);

    const Cholesky c = cholesky(o_mm);
    const VectorXd draw = -c.solve(shift) + precision_draw(c, rng);
    for (Index a = 0; a < n_miss; ++a) state.y(t, miss[a]) = fit[miss[a]] + draw[a];
  }
}

}  // namespace sulp
