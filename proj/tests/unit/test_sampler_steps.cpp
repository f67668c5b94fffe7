#include <doctest.h>

#include "test_support.hpp"

#include <sulp/errors.hpp>
#include <sulp/sampler.hpp>

#include <cmath>
#include <functional>
#include <string>

using namespace sulp;

namespace {

MatrixXd collect(Index n, Index d, const std::function<VectorXd()>& draw) {
  MatrixXd out(n, d);
  for (Index s = 0; s < n; ++s) out.row(s) = draw().transpose();
  return out;
}

}  // namespace

TEST_CASE("beta posterior with no data returns the prior") {
  Rng rng(1);
  const MatrixXd m = rng.normal_matrix(2, 3);
  const MatrixXd v = MatrixXd::Constant(2, 3, 0.5);
  const BetaPosterior post = beta_posterior(MatrixXd(0, 2), MatrixXd(0, 3), MatrixXd::Identity(3, 3), m, v);
  CHECK(post.mean.isApprox(m));
  CHECK(post.precision.inverse().isApprox(MatrixXd::Identity(6, 6) * 0.5));
}

TEST_CASE("beta posterior collapses to GLS under a diffuse prior") {
  Rng rng(2);
  const Index T = 40, H = 3;
  const MatrixXd x = rng.normal_matrix(T, 1);
  const MatrixXd y = x * rng.normal_matrix(1, H) + 0.1 * rng.normal_matrix(T, H);
  const BetaPosterior post =
      beta_posterior(x, y, MatrixXd::Identity(H, H), MatrixXd::Zero(1, H), MatrixXd::Constant(1, H, 1e12));
  // With a common regressor SUR reduces to equation-by-equation OLS.
  const MatrixXd ols = (x.transpose() * x).inverse() * x.transpose() * y;
  CHECK((post.mean - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gamma draws have the matrix-normal covariance") {
  Rng rng(3);
  const Index k = 2, H = 2;
  ControlsPrior prior = testing::flat_controls_prior(k, H, 0.7);
  const MatrixXd sigma = testing::random_spd(H, rng);
  const GammaPosterior post = gamma_posterior(MatrixXd(0, k), MatrixXd(0, H), prior);
  const Cholesky su = cholesky(sigma);
  const MatrixXd d = collect(40000, k * H, [&] {
    const MatrixXd g = draw_gamma(post, su, rng);
    return VectorXd(Eigen::Map<const VectorXd>(g.data(), k * H));
  });
  MatrixXd cov = MatrixXd::Zero(k * H, k * H);
  for (Index h = 0; h < H; ++h)
    for (Index g = 0; g < H; ++g)
      for (Index j = 0; j < k; ++j) cov(h * k + j, g * k + j) = sigma(h, g) * 0.7;
  std::string where;
  CHECK_MESSAGE(testing::worst_z(testing::sample_moments(d), VectorXd::Zero(k * H), cov, &where) < 4.0, where);
}

TEST_CASE("inverse-Wishart mean") {
  Rng rng(4);
  const MatrixXd scale = testing::random_spd(3, rng);
  MatrixXd sum = MatrixXd::Zero(3, 3);
  const int n = 40000;
  for (int i = 0; i < n; ++i) sum += sample_inverse_wishart(12.0, scale, rng);
  CHECK(((sum / n) - scale / 8.0).cwiseAbs().maxCoeff() < 0.02 * scale.diagonal().maxCoeff());
  CHECK_THROWS_AS(sample_inverse_wishart(1.5, scale, rng), NumericalError);
  CHECK_THROWS_AS(sample_inverse_wishart(8.0, -scale, rng), NumericalError);
}

TEST_CASE("Sigma_u conditional adds the controls-prior term") {
  Rng rng(5);
  CovPrior prior = default_cov_prior(2);
  ControlsPrior controls = testing::flat_controls_prior(1, 2, 0.5);
  const MatrixXd u = rng.normal_matrix(30, 2);
  const MatrixXd gamma = MatrixXd::Constant(1, 2, 3.0);
  MatrixXd sum = MatrixXd::Zero(2, 2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += draw_sigma_u(u, gamma, controls, prior, rng);
  const MatrixXd scale = prior.S0 + u.transpose() * u + gamma.transpose() * gamma / 0.5;
  const double dof = prior.s0 + 30 + 1;
  CHECK(((sum / n) - scale / (dof - 3.0)).cwiseAbs().maxCoeff() < 0.02 * scale.diagonal().maxCoeff() / dof);
}

TEST_CASE("GP mean posterior shrinks towards beta as v falls") {
  const KernelMatrix k = gp_kernel(5, 0.2, 1.0);
  const VectorXd beta = VectorXd::LinSpaced(5, 1.0, 0.0);
  VectorXd mean;
  MatrixXd cov;
  gp_mean_posterior(beta, k.k, VectorXd::Constant(5, 1e-8), mean, cov);
  CHECK((mean - beta).cwiseAbs().maxCoeff() < 1e-6);
  gp_mean_posterior(beta, k.k, VectorXd::Constant(5, 1e8), mean, cov);
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-6);
  CHECK((cov - k.k).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("kernel marginal likelihood is the Gaussian density of K + V") {
  const VectorXd beta = (VectorXd(3) << 0.5, 0.2, -0.1).finished();
  const VectorXd v = VectorXd::Constant(3, 0.3);
  MatrixXd s = gp_kernel_matrix(3, 0.4, 2.0);
  s.diagonal() += v;
  const double expected =
      -0.5 * (3 * std::log(2 * M_PI) + std::log(s.determinant()) + beta.dot(s.inverse() * beta));
  CHECK(kernel_log_marginal(beta, v, 0.4, 2.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("kernel MH stays in bounds and adapts") {
  Rng rng(6);
  GPKernelParams prior;
  double xi = 0.5, vs = 1.0;
  KernelMH mh{2.0, 20.0};
  const VectorXd beta = VectorXd::LinSpaced(6, 1.0, 0.0);
  const VectorXd v = VectorXd::Constant(6, 0.1);
  for (int i = 0; i < 2000; ++i) {
    const auto acc = draw_kernel_hyper(beta, v, prior, xi, vs, mh, rng);
    REQUIRE(prior.in_bounds(xi, vs));
    mh.adapt(acc.first, acc.second, 0.3, i);
  }
  CHECK(mh.proposed_xi == 2000);
  CHECK(mh.step_xi < 2.0);  // huge steps are mostly rejected, so they shrink
  KernelMH up{0.01, 0.01};
  for (int i = 0; i < 100; ++i) up.adapt(true, true, 0.3, i);
  CHECK(up.step_xi > 0.01);
}

TEST_CASE("NG draws are clamped and positive") {
  Rng rng(7);
  const VectorXd beta = (VectorXd(3) << 0.0, 1e-200, 5.0).finished();
  const VectorXd v = draw_ng_locals(beta, VectorXd::Zero(3), 0.1, 2.0, rng);
  CHECK(v.minCoeff() >= 1e-10);
  CHECK(v.maxCoeff() <= 1e10);
  NGParams p;
  CHECK(draw_ng_global(v, p, rng) > 0.0);
}

TEST_CASE("missing-cell draws leave observed cells untouched") {
  Rng rng(8);
  SULPSystem s = testing::tiny_system(4, 3, 1, 1, rng);
  s.missing_by_row[2] = {1};
  ChainState st;
  st.x = s.shocks;
  st.beta = rng.normal_matrix(1, 3);
  st.gamma = rng.normal_matrix(1, 3);
  st.sigma_u = testing::random_spd(3, rng);
  st.y = s.response;
  const MatrixXd before = st.y;
  draw_missing(s, st, rng);
  for (Index t = 0; t < 4; ++t)
    for (Index h = 0; h < 3; ++h)
      if (!(t == 2 && h == 1)) CHECK(st.y(t, h) == before(t, h));
  CHECK(st.y(2, 1) != before(2, 1));
}

TEST_CASE("FFBS matches the dense Gaussian smoother") {
  Rng rng(9);
  const Index T = 4;
  const double rho = 0.8, q = 0.3;
  const VectorXd y = (VectorXd(T) << 0.5, -1.0, 0.2, 1.5).finished();
  const VectorXd mm = VectorXd::Constant(T, -0.2);
  const VectorXd mv = (VectorXd(T) << 1.0, 0.5, 2.0, 0.8).finished();
  MatrixXd prior(T, T);
  for (Index i = 0; i < T; ++i)
    for (Index j = 0; j < T; ++j) prior(i, j) = q / (1 - rho * rho) * std::pow(rho, std::abs(double(i - j)));
  const MatrixXd cov = (prior.inverse() + MatrixXd(mv.cwiseInverse().asDiagonal())).inverse();
  const VectorXd mean = cov * (y - mm).cwiseQuotient(mv);
  const MatrixXd d = collect(60000, T, [&] { return ffbs_logvol(y, mm, mv, rho, q, rng); });
  std::string where;
  CHECK_MESSAGE(testing::worst_z(testing::sample_moments(d), mean, cov, &where) < 4.0, where);
}

TEST_CASE("stochastic-volatility step keeps parameters valid") {
  Rng rng(10);
  ChainState st;
  const Index T = 200;
  st.x.resize(T, 1);
  double h = 0.0;
  for (Index t = 0; t < T; ++t) {
    h = 0.95 * h + 0.2 * rng.normal();
    st.x(t, 0) = std::exp(0.5 * h) * rng.normal();
  }
  st.sv.logvol = MatrixXd::Zero(T, 1);
  st.sv.rho = VectorXd::Constant(1, 0.9);
  st.sv.vol_var = VectorXd::Constant(1, 0.03);
  SVPrior prior;
  for (int i = 0; i < 200; ++i) {
    draw_sv(st, 0, prior, rng);
    REQUIRE(std::abs(st.sv.rho[0]) < 1.0);
    REQUIRE(st.sv.vol_var[0] > 0.0);
    REQUIRE(st.sv.logvol.allFinite());
  }
}
