#include "criteria.hpp"
#include "test_support.hpp"

#include <sulp/linalg.hpp>
#include <sulp/model.hpp>
#include <sulp/sampler.hpp>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

namespace sulp::acceptance {
namespace {

using testing::random_spd;
using testing::sample_moments;

constexpr double kLimit = 3.0;

VectorXd flatten(const MatrixXd& m) { return Eigen::Map<const VectorXd>(m.data(), m.size()); }

// Shock-major vec(B') of an n_x x H matrix.
VectorXd shock_major(const MatrixXd& b) { return flatten(MatrixXd(b.transpose())); }

MatrixXd collect(Index n, Index d, const std::function<VectorXd()>& draw) {
  MatrixXd out(n, d);
  for (Index s = 0; s < n; ++s) out.row(s) = draw().transpose();
  return out;
}

// Half-vectorization (lower triangle, column by column).
VectorXd vech(const MatrixXd& m) {
  const Index p = m.rows();
  VectorXd v(p * (p + 1) / 2);
  Index n = 0;
  for (Index j = 0; j < p; ++j)
    for (Index i = j; i < p; ++i) v[n++] = m(i, j);
  return v;
}

// Mean and covariance of vech(S) for S ~ IW(dof, psi).
void iw_moments(double dof, const MatrixXd& psi, VectorXd& mean, MatrixXd& cov) {
  const Index p = psi.rows();
  const double d = dof - static_cast<double>(p);
  mean = vech(psi / (d - 1.0));
  std::vector<std::pair<Index, Index>> idx;
  for (Index j = 0; j < p; ++j)
    for (Index i = j; i < p; ++i) idx.emplace_back(i, j);
  const Index m = static_cast<Index>(idx.size());
  cov.resize(m, m);
  const double denom = d * (d - 1.0) * (d - 1.0) * (d - 3.0);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b) {
      const auto [i, j] = idx[a];
      const auto [k, l] = idx[b];
      cov(a, b) = (2.0 * psi(i, j) * psi(k, l) + (d - 1.0) * (psi(i, k) * psi(j, l) + psi(i, l) * psi(k, j))) / denom;
    }
}

// Every mean and covariance entry is one statistic. With a few hundred of
// them, |z| > 3 somewhere is likely under a correct sampler, so the pass rule
// bounds the largest |z| at a 1% family-wise (Bonferroni) level and the 3-SE
// exceedances are only counted.
struct Report {
  bool exact_ok = true;
  std::ostringstream text;
  void check(const std::string& name, const testing::SampleMoments& m, const VectorXd& mean, const MatrixXd& cov) {
    for (const double z : testing::moment_z(m, mean, cov)) {
      ++count;
      if (z > kLimit) {
        ++over;
        text << name << " z=" << z << "; ";
      }
      if (z > worst) {
        worst = z;
        worst_name = name;
      }
    }
  }
  void exact(const std::string& name, double err, double tol) {
    if (!(err <= tol)) {
      exact_ok = false;
      text << name << " closed form off by " << err << "; ";
    }
  }
  double family_limit() const { return normal_quantile(1.0 - 0.005 / static_cast<double>(count)); }
  bool ok() const { return exact_ok && worst <= family_limit(); }
  Index count = 0;
  Index over = 0;
  double worst = 0.0;
  std::string worst_name;
};

double truncnorm_mean(double m, double s) {
  const double a = -m / s;
  const double z = 1.0 - normal_cdf(a);
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  return m + s * pdf / z;
}

double truncnorm_var(double m, double s) {
  const double a = -m / s;
  const double z = 1.0 - normal_cdf(a);
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double r = pdf / z;
  return s * s * (1.0 + a * r - r * r);
}

}  // namespace

Outcome conjugate_steps(Index n) {
  Report rep;
  const Index H = 3;

  // beta, prior reproduction: no rows.
  {
    Rng rng(101);
    const Index n_x = 2;
    const MatrixXd prior_mean = rng.normal_matrix(n_x, H);
    const MatrixXd prior_var = (rng.normal_matrix(n_x, H).array().square() + 0.2).matrix();
    const BetaPosterior post =
        beta_posterior(MatrixXd(0, n_x), MatrixXd(0, H), MatrixXd::Identity(H, H), prior_mean, prior_var);
    const MatrixXd d = collect(n, n_x * H, [&] { return shock_major(draw_beta(post, rng)); });
    rep.check("beta prior", sample_moments(d), shock_major(prior_mean), shock_major(prior_var).asDiagonal().toDenseMatrix());
  }
  // beta, dense GLS oracle.
  {
    Rng rng(102);
    const Index n_x = 2, T = 6;
    const MatrixXd x = rng.normal_matrix(T, n_x);
    const MatrixXd yt = rng.normal_matrix(T, H);
    const MatrixXd sigma = random_spd(H, rng);
    const MatrixXd sigma_inv = sigma.inverse();
    const MatrixXd prior_mean = rng.normal_matrix(n_x, H);
    const MatrixXd prior_var = (rng.normal_matrix(n_x, H).array().square() + 0.2).matrix();
    MatrixXd xbig = MatrixXd::Zero(T * H, n_x * H);
    for (Index t = 0; t < T; ++t)
      for (Index h = 0; h < H; ++h)
        for (Index i = 0; i < n_x; ++i) xbig(h * T + t, i * H + h) = x(t, i);
    const MatrixXd w = Eigen::kroneckerProduct(sigma_inv, MatrixXd::Identity(T, T));
    const VectorXd pv = shock_major(prior_var);
    MatrixXd prec = xbig.transpose() * w * xbig;
    prec.diagonal() += pv.cwiseInverse();
    const MatrixXd cov = prec.inverse();
    const VectorXd mean = cov * (xbig.transpose() * w * flatten(yt) + shock_major(prior_mean).cwiseQuotient(pv));
    const BetaPosterior post = beta_posterior(x, yt, sigma_inv, prior_mean, prior_var);
    rep.exact("beta mean", (shock_major(post.mean) - mean).cwiseAbs().maxCoeff(), 1e-10);
    const MatrixXd d = collect(n, n_x * H, [&] { return shock_major(draw_beta(post, rng)); });
    rep.check("beta dense", sample_moments(d), mean, cov);
  }
  // gamma, prior reproduction and dense oracle.
  {
    Rng rng(103);
    const Index k = 2, T = 6;
    const MatrixXd sigma = random_spd(H, rng);
    ControlsPrior prior;
    prior.mean = rng.normal_matrix(k, H);
    prior.variance = (rng.normal_vector(k).array().square() + 0.3).matrix();
    const Cholesky su = cholesky(sigma);

    const GammaPosterior p0 = gamma_posterior(MatrixXd(0, k), MatrixXd(0, H), prior);
    const MatrixXd d0 = collect(n, k * H, [&] { return flatten(draw_gamma(p0, su, rng)); });
    const MatrixXd cov0 = Eigen::kroneckerProduct(sigma, MatrixXd(prior.variance.asDiagonal()));
    rep.check("gamma prior", sample_moments(d0), flatten(prior.mean), cov0);

    const MatrixXd z = rng.normal_matrix(T, k);
    const MatrixXd r = rng.normal_matrix(T, H);
    const MatrixXd sigma_inv = sigma.inverse();
    const MatrixXd zbig = Eigen::kroneckerProduct(MatrixXd::Identity(H, H), z);
    const MatrixXd w = Eigen::kroneckerProduct(sigma_inv, MatrixXd::Identity(T, T));
    const MatrixXd prior_prec = Eigen::kroneckerProduct(sigma_inv, MatrixXd(prior.variance.cwiseInverse().asDiagonal()));
    const MatrixXd prec = zbig.transpose() * w * zbig + prior_prec;
    const MatrixXd cov = prec.inverse();
    const VectorXd mean = cov * (zbig.transpose() * w * flatten(r) + prior_prec * flatten(prior.mean));
    const GammaPosterior p1 = gamma_posterior(z, r, prior);
    rep.exact("gamma mean", (flatten(p1.mean) - mean).cwiseAbs().maxCoeff(), 1e-10);
    const MatrixXd d1 = collect(n, k * H, [&] { return flatten(draw_gamma(p1, su, rng)); });
    rep.check("gamma dense", sample_moments(d1), mean, cov);
  }
  // Sigma_u: prior reproduction, and the conditional with a Sigma_u-scaled
  // controls prior.
  {
    Rng rng(104);
    CovPrior prior;
    prior.s0 = static_cast<double>(H) + 10.0;
    prior.S0 = random_spd(H, rng);
    VectorXd mean;
    MatrixXd cov;
    iw_moments(prior.s0, prior.S0, mean, cov);
    const MatrixXd d0 = collect(n, H * (H + 1) / 2, [&] { return vech(draw_sigma_u(MatrixXd(0, H), prior, rng)); });
    rep.check("Sigma_u prior", sample_moments(d0), mean, cov);

    const Index T = 5, k = 2;
    const MatrixXd u = rng.normal_matrix(T, H);
    ControlsPrior controls;
    controls.mean = rng.normal_matrix(k, H);
    controls.variance = VectorXd::Constant(k, 2.0);
    const MatrixXd gamma = rng.normal_matrix(k, H);
    const MatrixXd dev = gamma - controls.mean;
    const MatrixXd scale = prior.S0 + u.transpose() * u + dev.transpose() * dev / 2.0;
    iw_moments(prior.s0 + static_cast<double>(T + k), scale, mean, cov);
    const MatrixXd d1 =
        collect(n, H * (H + 1) / 2, [&] { return vech(draw_sigma_u(u, gamma, controls, prior, rng)); });
    rep.check("Sigma_u conditional", sample_moments(d1), mean, cov);
  }
  // GP mean: closed form against the precision form, draws against it, and
  // reproduction of N(0, K) when beta is drawn from the prior.
  {
    Rng rng(105);
    const KernelMatrix kernel = gp_kernel(H, 0.3, 1.5);
    const VectorXd v = (rng.normal_vector(H).array().square() + 0.1).matrix();
    const VectorXd beta = rng.normal_vector(H);
    VectorXd mean;
    MatrixXd cov;
    gp_mean_posterior(beta, kernel.k, v, mean, cov);
    const MatrixXd dense_cov = (kernel.k.inverse() + MatrixXd(v.cwiseInverse().asDiagonal())).inverse();
    const VectorXd dense_mean = dense_cov * beta.cwiseQuotient(v);
    rep.exact("GP mean", (mean - dense_mean).cwiseAbs().maxCoeff() + (cov - dense_cov).cwiseAbs().maxCoeff(), 1e-8);
    const MatrixXd d = collect(n, H, [&] { return draw_gp_mean(beta, kernel, v, rng); });
    rep.check("GP mean dense", sample_moments(d), dense_mean, dense_cov);

    const MatrixXd d0 = collect(n, H, [&] {
      const VectorXd mu = kernel.chol.lower * rng.normal_vector(H);
      const VectorXd b = mu + v.cwiseSqrt().cwiseProduct(rng.normal_vector(H));
      return draw_gp_mean(b, kernel, v, rng);
    });
    rep.check("GP mean prior", sample_moments(d0), VectorXd::Zero(H), kernel.k);
  }
  // NG local scales: GIG closed form for fixed beta - mu, and reproduction of
  // the Gamma(theta, theta tau2_tilde / 2) prior.
  {
    Rng rng(106);
    const double theta = 2.0, tt = 1.3;
    const VectorXd dev = rng.normal_vector(H);
    const VectorXd zero = VectorXd::Zero(H);
    VectorXd mean(H);
    MatrixXd cov = MatrixXd::Zero(H, H);
    const double nu = theta - 0.5, psi = theta * tt;
    for (Index h = 0; h < H; ++h) {
      const double chi = dev[h] * dev[h];
      const double omega = std::sqrt(chi * psi);
      const double r = std::sqrt(chi / psi);
      const double k0 = std::cyl_bessel_k(nu, omega);
      mean[h] = r * std::cyl_bessel_k(nu + 1.0, omega) / k0;
      cov(h, h) = r * r * std::cyl_bessel_k(nu + 2.0, omega) / k0 - mean[h] * mean[h];
    }
    const MatrixXd d = collect(n, H, [&] { return draw_ng_locals(dev, zero, theta, tt, rng); });
    rep.check("NG locals dense", sample_moments(d), mean, cov);

    const double rate = 0.5 * theta * tt;
    const MatrixXd d0 = collect(n, H, [&] {
      VectorXd v(H), b(H);
      for (Index h = 0; h < H; ++h) {
        v[h] = rng.gamma(theta, rate);
        b[h] = std::sqrt(v[h]) * rng.normal();
      }
      return draw_ng_locals(b, zero, theta, tt, rng);
    });
    rep.check("NG locals prior", sample_moments(d0), VectorXd::Constant(H, theta / rate),
                                        MatrixXd(VectorXd::Constant(H, theta / (rate * rate)).asDiagonal()));
  }
  // NG global scale.
  {
    Rng rng(107);
    NGParams prior;
    prior.a_tau = 5.0;
    prior.b_tau = 4.0;
    prior.theta = 2.0;
    const VectorXd v = (rng.normal_vector(H).array().square() + 0.5).matrix();
    const double shape = prior.a_tau + prior.theta * H;
    const double rate = prior.b_tau + 0.5 * prior.theta * v.sum();
    const MatrixXd d = collect(n, 1, [&] { return VectorXd::Constant(1, draw_ng_global(v, prior, rng)); });
    rep.check("NG global dense", sample_moments(d), VectorXd::Constant(1, shape / rate), MatrixXd::Constant(1, 1, shape / (rate * rate)));
    const MatrixXd d0 = collect(n, 1, [&] {
      const double tt = rng.gamma(prior.a_tau, prior.b_tau);
      VectorXd vv(H);
      for (Index h = 0; h < H; ++h) vv[h] = rng.gamma(prior.theta, 0.5 * prior.theta * tt);
      return VectorXd::Constant(1, draw_ng_global(vv, prior, rng));
    });
    rep.check("NG global prior", sample_moments(d0), VectorXd::Constant(1, prior.a_tau / prior.b_tau),
                    MatrixXd::Constant(1, 1, prior.a_tau / (prior.b_tau * prior.b_tau)));
  }
  // Measurement equation: prior reproduction with no rows, and the truncated
  // Gaussian loading against its closed form.
  {
    Rng rng(108);
    MeasurementPrior prior;
    prior.a_nu = 6.0;
    prior.b_nu = 5.0;
    auto make = [&](Index T, Index k) {
      SULPSystem s;
      s.response.resize(T, H);
      s.shocks = rng.normal_matrix(T, 1);
      s.controls = rng.normal_matrix(T, k);
      s.instruments = rng.normal_matrix(T, 1);
      s.shock_info = {ShockInfo{"x", true, {0}}};
      s.instrument_names = {"m"};
      s.missing_by_row.assign(static_cast<std::size_t>(T), {});
      return s;
    };
    auto state_for = [](const SULPSystem& s) {
      ChainState st;
      st.x = s.shocks;
      st.measurement.phi = VectorXd::Ones(1);
      st.measurement.delta = MatrixXd::Zero(s.n_controls(), 1);
      st.measurement.sigma2_nu = VectorXd::Constant(1, 0.7);
      st.measurement.Sigma_nu = MatrixXd::Identity(1, 1);
      return st;
    };
    {
      const SULPSystem s = make(0, 1);
      ChainState st = state_for(s);
      const MatrixXd d = collect(n, 3, [&] {
        draw_measurement_params(s, st, prior, rng);
        return (VectorXd(3) << st.measurement.phi[0], st.measurement.delta(0, 0), st.measurement.sigma2_nu[0]).finished();
      });
      VectorXd mean(3);
      mean << truncnorm_mean(prior.phi_mean, std::sqrt(prior.phi_var)), 0.0, prior.b_nu / (prior.a_nu - 1.0);
      VectorXd var(3);
      var << truncnorm_var(prior.phi_mean, std::sqrt(prior.phi_var)), prior.delta_var,
          prior.b_nu * prior.b_nu / ((prior.a_nu - 1.0) * (prior.a_nu - 1.0) * (prior.a_nu - 2.0));
      rep.check("measurement prior", sample_moments(d), mean, MatrixXd(var.asDiagonal()));
    }
    {
      // phi | sigma2_nu: marginal of the Gaussian regression posterior,
      // truncated at zero; delta | phi Gaussian.
      const Index T = 4, k = 1;
      const SULPSystem s = make(T, k);
      ChainState st = state_for(s);
      const double s2 = st.measurement.sigma2_nu[0];
      MatrixXd w(T, k + 1);
      w.col(0) = s.shocks.col(0);
      w.rightCols(k) = s.controls;
      MatrixXd prec = w.transpose() * w / s2;
      prec(0, 0) += 1.0 / prior.phi_var;
      prec(1, 1) += 1.0 / prior.delta_var;
      VectorXd rhs = w.transpose() * s.instruments.col(0) / s2;
      rhs[0] += prior.phi_mean / prior.phi_var;
      const MatrixXd cov = prec.inverse();
      const VectorXd m = cov * rhs;
      const double sd = std::sqrt(cov(0, 0));
      const double e_phi = truncnorm_mean(m[0], sd);
      const double v_phi = truncnorm_var(m[0], sd);
      const double slope = cov(1, 0) / cov(0, 0);
      const double e_delta = m[1] + slope * (e_phi - m[0]);
      const double v_delta = cov(1, 1) - slope * cov(1, 0) + slope * slope * v_phi;
      const MatrixXd d = collect(n, 2, [&] {
        st.measurement.sigma2_nu[0] = s2;
        draw_measurement_params(s, st, prior, rng);
        return (VectorXd(2) << st.measurement.phi[0], st.measurement.delta(0, 0)).finished();
      });
      MatrixXd c(2, 2);
      c << v_phi, slope * v_phi, slope * v_phi, v_delta;
      rep.check("measurement dense", sample_moments(d), (VectorXd(2) << e_phi, e_delta).finished(), c);
    }
  }
  // Missing responses: conditional Gaussian given the observed cells, and the
  // full-row case that reproduces N(fit, Sigma_u).
  {
    Rng rng(109);
    SULPSystem s;
    const Index k = 1;
    s.shocks = rng.normal_matrix(2, 1);
    s.controls = rng.normal_matrix(2, k);
    s.response = rng.normal_matrix(2, H);
    s.shock_info = {ShockInfo{"x", false, {}}};
    s.missing_by_row = {{0, 2}, {0, 1, 2}};
    s.instruments.resize(2, 0);
    ChainState st;
    st.x = s.shocks;
    st.beta = rng.normal_matrix(1, H);
    st.gamma = rng.normal_matrix(k, H);
    st.sigma_u = random_spd(H, rng);
    st.y = s.response;
    const MatrixXd fit = s.shocks * st.beta + s.controls * st.gamma;
    const MatrixXd d = collect(n, 2 + H, [&] {
      draw_missing(s, st, rng);
      return (VectorXd(2 + H) << st.y(0, 0), st.y(0, 2), st.y.row(1).transpose()).finished();
    });
    const MatrixXd& S = st.sigma_u;
    const Eigen::Vector2d s_mo(S(0, 1), S(2, 1));
    MatrixXd s_mm(2, 2);
    s_mm << S(0, 0), S(0, 2), S(2, 0), S(2, 2);
    const double u_o = s.response(0, 1) - fit(0, 1);
    VectorXd mean(2 + H);
    mean << fit(0, 0) + s_mo[0] / S(1, 1) * u_o, fit(0, 2) + s_mo[1] / S(1, 1) * u_o, fit.row(1).transpose();
    MatrixXd cov = MatrixXd::Zero(2 + H, 2 + H);
    cov.topLeftCorner(2, 2) = s_mm - s_mo * s_mo.transpose() / S(1, 1);
    cov.bottomRightCorner(H, H) = S;
    rep.check("missing y", sample_moments(d), mean, cov);
  }
  // Latent shocks: joint-covariance conditioning of x on (y, m), and the
  // uninformative case that reproduces the N(0, 1) prior.
  {
    Rng rng(110);
    const Index k = 1;
    SULPSystem s;
    s.shocks = MatrixXd::Zero(1, 1);
    s.controls = rng.normal_matrix(1, k);
    s.response = rng.normal_matrix(1, H);
    s.instruments = rng.normal_matrix(1, 2);
    s.shock_info = {ShockInfo{"x", true, {0, 1}}};
    s.instrument_names = {"m1", "m2"};
    s.missing_by_row = {{}};
    ChainState st;
    st.x = s.shocks;
    st.beta = rng.normal_matrix(1, H);
    st.gamma = rng.normal_matrix(k, H);
    st.sigma_u = random_spd(H, rng);
    st.y = s.response;
    st.measurement.phi = (VectorXd(2) << 0.8, 1.4).finished();
    st.measurement.delta = rng.normal_matrix(k, 2);
    st.measurement.sigma2_nu = (VectorXd(2) << 0.5, 1.2).finished();
    st.measurement.Sigma_nu = MatrixXd(st.measurement.sigma2_nu.asDiagonal());

    VectorXd a(H + 2), obs(H + 2);
    a << st.beta.row(0).transpose(), st.measurement.phi;
    obs << (s.response.row(0) - s.controls.row(0) * st.gamma).transpose(),
        (s.instruments.row(0) - s.controls.row(0) * st.measurement.delta).transpose();
    MatrixXd noise = MatrixXd::Zero(H + 2, H + 2);
    noise.topLeftCorner(H, H) = st.sigma_u;
    noise.bottomRightCorner(2, 2) = st.measurement.Sigma_nu;
    const MatrixXd joint = a * a.transpose() + noise;
    const VectorXd gain = joint.ldlt().solve(a);
    const double mean = gain.dot(obs);
    const double var = 1.0 - a.dot(gain);
    const MatrixXd d = collect(n, 1, [&] {
      draw_latent_shocks(s, st, rng);
      return VectorXd::Constant(1, st.x(0, 0));
    });
    rep.check("latent x dense", sample_moments(d), VectorXd::Constant(1, mean), MatrixXd::Constant(1, 1, var));

    SULPSystem s0 = s;
    s0.instruments.resize(1, 0);
    s0.instrument_names.clear();
    s0.shock_info = {ShockInfo{"x", true, {}}};
    ChainState st0 = st;
    st0.beta.setZero();
    st0.measurement = MeasurementState{VectorXd(0), MatrixXd(k, 0), VectorXd(0), MatrixXd(0, 0)};
    const MatrixXd d0 = collect(n, 1, [&] {
      draw_latent_shocks(s0, st0, rng);
      return VectorXd::Constant(1, st0.x(0, 0));
    });
    rep.check("latent x prior", sample_moments(d0), VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  }

  std::ostringstream msg;
  msg << "worst |z| = " << rep.worst << " (" << rep.worst_name << ") over " << rep.count << " moments at " << n
      << " draws per check; family-wise limit " << rep.family_limit() << "; " << rep.over << " moments beyond 3 SE (expected "
      << 0.0027 * static_cast<double>(rep.count) << ")";
  if (!rep.text.str().empty()) msg << ": " << rep.text.str();
  return {rep.ok(), msg.str()};
}

}  // namespace sulp::acceptance
