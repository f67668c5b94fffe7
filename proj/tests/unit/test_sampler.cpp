#include <doctest.h>

#include "test_support.hpp"

#include <sulp/errors.hpp>
#include <sulp/sampler.hpp>

#include <cmath>
#include <limits>

using namespace sulp;

namespace {

SamplerConfig quick(int n = 600, int burn = 200, int thin = 2) {
  SamplerConfig c;
  c.n_draws = n;
  c.burn_in = burn;
  c.thin = thin;
  c.seed = 17;
  return c;
}

// One latent shock measured by one instrument with loading 1 and noise 0.5.
SULPSystem latent_system(Index T, Rng& rng, VectorXd& truth) {
  SULPSystem s = testing::tiny_system(T, 4, 1, 1, rng);
  truth = s.shocks.col(0);
  s.instruments = s.shocks + 0.5 * rng.normal_matrix(T, 1);
  s.shocks = s.instruments;
  s.shock_info[0].latent = true;
  s.shock_info[0].instruments = {0};
  s.instrument_names = {"m"};
  return s;
}

double correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd x = a.array() - a.mean();
  const VectorXd y = b.array() - b.mean();
  return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

}  // namespace

TEST_CASE("config validation and stored draws") {
  SamplerConfig c = quick(100, 10, 3);
  CHECK(c.stored_draws() == 30);
  c.burn_in = 100;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = quick();
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = quick();
  c.adapt_target = 1.0;
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("chain shapes and reproducibility") {
  Rng rng(1);
  const SULPSystem s = testing::tiny_system(60, 5, 2, 2, rng);
  const HyperParams hp = default_hyperparameters(5);
  const ControlsPrior cp = testing::flat_controls_prior(2, 5, 10.0);
  const Chain a = run_sampler(s, hp, cp, quick());
  CHECK(a.draws() == 200);
  CHECK(a.beta.cols() == 10);
  CHECK(a.sigma_u.cols() == 25);
  CHECK(a.gamma.cols() == 10);
  CHECK(a.xi.cols() == 2);
  CHECK(a.x.size() == 0);
  CHECK(a.phi.cols() == 0);
  CHECK(a.log_lik.allFinite());
  CHECK(a.acceptance_xi.size() == 2);
  CHECK((a.acceptance_xi.array() > 0.0).all());
  const GPKernelParams& k = hp.kernel;
  CHECK(a.xi.minCoeff() >= k.xi_low);
  CHECK(a.xi.maxCoeff() <= k.xi_high);
  CHECK(a.varsigma.maxCoeff() <= k.varsigma_high);
  CHECK(a.v_beta.minCoeff() > 0.0);

  const Chain b = run_sampler(s, hp, cp, quick());
  CHECK(a.beta == b.beta);
  CHECK(a.log_lik == b.log_lik);
  SamplerConfig other = quick();
  other.seed = 18;
  CHECK(run_sampler(s, hp, cp, other).beta != a.beta);

  SamplerConfig no_gamma = quick();
  no_gamma.store_gamma = false;
  CHECK(run_sampler(s, hp, cp, no_gamma).gamma.size() == 0);
}

TEST_CASE("flat prior recovers the GLS fit in a long sample") {
  Rng rng(2);
  const SULPSystem s = testing::tiny_system(2000, 3, 1, 1, rng);
  HyperParams hp = default_hyperparameters(3);
  hp.irf_prior = IrfPrior::Flat;
  const Chain c = run_sampler(s, hp, testing::flat_controls_prior(1, 3, 100.0), quick(1500, 500, 1));
  CHECK((c.v_beta.array() == hp.flat_variance).all());
  MatrixXd w(2000, 2);
  w << s.shocks, s.controls;
  const MatrixXd ols = w.householderQr().solve(s.response);
  const VectorXd mean = c.beta.colwise().mean();
  for (Index h = 0; h < 3; ++h) CHECK(std::abs(mean[h] - ols(0, h)) < 0.02);
}

TEST_CASE("missing responses are imputed") {
  Rng rng(3);
  SULPSystem s = testing::tiny_system(80, 4, 1, 1, rng);
  for (Index t = 70; t < 80; ++t) {
    for (Index h = 1; h < 4; ++h) s.response(t, h) = std::numeric_limits<double>::quiet_NaN();
    s.missing_by_row[t] = {1, 2, 3};
  }
  Sampler sampler(s, default_hyperparameters(4), testing::flat_controls_prior(1, 4, 10.0), quick());
  CHECK(sampler.state().y.allFinite());
  Rng r(4);
  const MatrixXd before = sampler.state().y;
  sampler.sweep(r, true);
  CHECK(sampler.state().y(75, 2) != before(75, 2));
  CHECK(sampler.state().y(75, 0) == before(75, 0));
  CHECK(std::isfinite(sampler.state().log_lik));
}

TEST_CASE("latent shocks track the truth") {
  Rng rng(5);
  VectorXd truth;
  const SULPSystem s = latent_system(300, rng, truth);
  const Chain c = run_sampler(s, default_hyperparameters(4), testing::flat_controls_prior(1, 4, 10.0), quick(1000, 300, 1));
  REQUIRE(c.x.cols() == 300);
  CHECK(c.phi.cols() == 1);
  CHECK(c.phi.minCoeff() > 0.0);
  CHECK(c.sigma2_nu.minCoeff() > 0.0);
  const VectorXd xbar = c.x.colwise().mean();
  CHECK(correlation(xbar, truth) > 0.8);
}

TEST_CASE("stochastic volatility runs store log-volatility") {
  Rng rng(6);
  VectorXd truth;
  SULPSystem s = latent_system(150, rng, truth);
  s.stochastic_volatility = true;
  const Chain c = run_sampler(s, default_hyperparameters(4), testing::flat_controls_prior(1, 4, 10.0), quick());
  CHECK(c.logvol.cols() == 150);
  CHECK(c.logvol.allFinite());
  CHECK(c.log_lik.allFinite());
}

TEST_CASE("mismatched controls prior is rejected") {
  Rng rng(7);
  const SULPSystem s = testing::tiny_system(30, 3, 1, 2, rng);
  CHECK_THROWS_AS(Sampler(s, default_hyperparameters(3), testing::flat_controls_prior(1, 3, 1.0), quick()), DataError);
}
