#include <doctest.h>

#include "test_support.hpp"

#include <sulp/errors.hpp>
#include <sulp/linalg.hpp>
#include <sulp/priors.hpp>

#include <fstream>
#include <nlohmann/json.hpp>

using namespace sulp;

TEST_CASE("cholesky solve, inverse and log determinant") {
  Rng rng(1);
  const MatrixXd a = testing::random_spd(5, rng);
  const Cholesky c = cholesky(a);
  CHECK(c.jitter == 0.0);
  CHECK((c.lower * c.lower.transpose() - a).cwiseAbs().maxCoeff() < 1e-12);
  const VectorXd b = rng.normal_vector(5);
  CHECK((a * c.solve(b) - b).norm() < 1e-10);
  CHECK((c.inverse() * a - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(c.log_det() == doctest::Approx(std::log(a.determinant())).epsilon(1e-12));
}

TEST_CASE("cholesky rejects indefinite matrices") {
  MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(a), NumericalError);
  CHECK_THROWS_AS(cholesky_jittered(a), NumericalError);
}

TEST_CASE("jitter ladder rescues a singular PSD matrix") {
  const VectorXd v = VectorXd::Ones(4);
  const MatrixXd a = v * v.transpose();
  const Cholesky c = cholesky_jittered(a);
  CHECK(c.jitter > 0.0);
  CHECK(c.jitter <= 1e-6 * a.trace() / 4.0);
}

TEST_CASE("multivariate normal log density") {
  Rng rng(2);
  const MatrixXd s = testing::random_spd(3, rng);
  const VectorXd x = rng.normal_vector(3), m = rng.normal_vector(3);
  const VectorXd d = x - m;
  const double expected = -0.5 * (3 * std::log(2 * M_PI) + std::log(s.determinant()) + d.dot(s.inverse() * d));
  CHECK(mvn_log_density(x, m, cholesky(s)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("GP kernel structure") {
  const MatrixXd k0 = gp_kernel_matrix(6, 0.5, 0.0);
  for (Index i = 0; i < 6; ++i) CHECK(k0(i, i) == 1.0);
  CHECK(k0(0, 1) == doctest::Approx(std::exp(-0.25)));
  CHECK(k0(2, 5) == doctest::Approx(std::exp(-0.5 * 0.5 * 9)));

  const MatrixXd k = gp_kernel_matrix(4, 0.2, 2.0);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(3, 3) == std::pow(0.25, 2.0));
  CHECK(k(1, 3) == doctest::Approx(std::sqrt(0.75 * 0.75 * 0.25 * 0.25) * std::exp(-0.1 * 4)));
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(gp_kernel_matrix(1, 0.3, 4.0)(0, 0) == 1.0);
}

TEST_CASE("smooth kernels factor with bounded jitter") {
  const KernelMatrix km = gp_kernel(41, 0.01, 0.0);
  CHECK(km.chol.jitter <= 1e-6 * 41.0);
  CHECK((km.chol.lower * km.chol.lower.transpose() - km.k).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("kernel hyperparameter prior bounds") {
  const GPKernelParams p;
  CHECK_FALSE(p.in_bounds(p.xi_low, 1.0));
  CHECK(p.in_bounds(p.xi_high, 1.0));
  CHECK(p.in_bounds(0.5, p.varsigma_low));
  CHECK_FALSE(p.in_bounds(0.5, p.varsigma_high + 1e-9));
  CHECK(std::isinf(p.log_prior(2.0, 1.0)));
  CHECK(p.log_prior(p.m_xi, p.m_varsigma) == 0.0);
  CHECK(p.log_prior(p.m_xi + 0.1, p.m_varsigma) == doctest::Approx(-0.5 * 0.01 / p.v_xi));
}

TEST_CASE("Minnesota controls prior") {
  std::vector<ControlColumn> layout = {{"r", ControlRole::Contemporaneous, 0},
                                       {"y_l1", ControlRole::OwnLag, 1},
                                       {"x_l1", ControlRole::CrossLag, 1},
                                       {"y_l2", ControlRole::OwnLag, 2},
                                       {"x_l2", ControlRole::CrossLag, 2},
                                       {"const", ControlRole::Deterministic, 0}};
  const ControlsPrior p = minnesota_controls_prior(layout, 3, false);
  CHECK(p.variance[0] == 100.0);
  CHECK(p.variance[1] == doctest::Approx(0.04));
  CHECK(p.variance[2] == doctest::Approx(0.0016));
  CHECK(p.variance[3] == doctest::Approx(0.01));
  CHECK(p.variance[4] == doctest::Approx(0.0004));
  CHECK(p.variance[5] == 100.0);
  CHECK(p.mean.isZero());
  const ControlsPrior lv = minnesota_controls_prior(layout, 3, true);
  CHECK(lv.mean.row(1).isOnes());
  CHECK(lv.mean.row(3).isZero());
  CHECK_THROWS_AS(minnesota_controls_prior(layout, 3, false, {0.0, 1.0, 1.0}), DataError);
}

TEST_CASE("covariance and measurement prior defaults") {
  const CovPrior c = default_cov_prior(5, 2.0);
  CHECK(c.s0 == 7.0);
  CHECK(c.S0.isApprox(2.0 * MatrixXd::Identity(5, 5)));
  MeasurementPrior m;
  CHECK(m.resolved_s0_nu(2) == 6.0);
  // Prior mean S0 / (s0 - n - 1) equals b / (a - 1) times the identity.
  CHECK((m.resolved_S0_nu(2) / (6.0 - 3.0)).isApprox(1.5 * MatrixXd::Identity(2, 2)));
  NGParams ng;
  ng.lambda2 = VectorXd::Constant(3, 0.5);
  ng.tau2_tilde = 4.0;
  CHECK(ng_prior_variance(ng).isApprox(VectorXd::Constant(3, 0.25)));
}

TEST_CASE("default hyperparameters match the reference document") {
  std::ifstream in(std::string(SULP_SOURCE_DIR) + "/data/reference/default_hyperparameters.json");
  REQUIRE(in);
  nlohmann::json ref;
  in >> ref;
  CHECK(to_json(default_hyperparameters(17)) == ref);
  CHECK_THROWS_AS(default_hyperparameters(0), DataError);
}
