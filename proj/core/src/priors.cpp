#include "sulp/priors.hpp"

#include "sulp/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace sulp {

bool GPKernelParams::in_bounds(double xi_value, double varsigma_value) const {
  return xi_value > xi_low && xi_value <= xi_high && varsigma_value >= varsigma_low && varsigma_value <= varsigma_high;
}

double GPKernelParams::log_prior(double xi_value, double varsigma_value) const {
  if (!in_bounds(xi_value, varsigma_value)) return -std::numeric_limits<double>::infinity();
  const double a = xi_value - m_xi;
  const double b = varsigma_value - m_varsigma;
  return -0.5 * a * a / v_xi - 0.5 * b * b / v_varsigma;
}

MatrixXd gp_kernel_matrix(Index horizons, double xi, double varsigma) {
  const Index H = horizons;
  VectorXd scale(H);
  for (Index i = 0; i < H; ++i) {
    const double d = static_cast<double>(H - i) / static_cast<double>(H);
    scale[i] = varsigma == 0.0 ? 1.0 : std::pow(d, 0.5 * varsigma);
  }
  MatrixXd k(H, H);
  for (Index i = 0; i < H; ++i) {
    const double d = static_cast<double>(H - i) / static_cast<double>(H);
    k(i, i) = varsigma == 0.0 ? 1.0 : std::pow(d, varsigma);
    for (Index j = 0; j < i; ++j) {
      const double gap = static_cast<double>(i - j);
      const double value = scale[i] * scale[j] * std::exp(-0.5 * xi * gap * gap);
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

KernelMatrix gp_kernel(Index horizons, double xi, double varsigma) {
  MatrixXd k = gp_kernel_matrix(horizons, xi, varsigma);
  try {
    Cholesky chol = cholesky_jittered(k, 1e-10, 1e-6);
    return {std::move(k), std::move(chol)};
  } catch (const NumericalError&) {
    std::ostringstream msg;
    msg << "GP kernel not positive definite (xi=" << xi << ", varsigma=" << varsigma << ", H=" << horizons << ")";
    throw NumericalError(NumericalError::Kind::KernelNotPD, msg.str());
  }
}

VectorXd ng_prior_variance(const NGParams& ng) { return ng.tau2() * ng.lambda2; }

ControlsPrior minnesota_controls_prior(const std::vector<ControlColumn>& layout, Index horizons, bool levels,
                                       const MinnesotaTightness& tightness) {
  if (!(tightness.kappa_own > 0.0 && tightness.kappa_cross > 0.0 && tightness.kappa_det > 0.0))
    throw DataError(DataError::Kind::InvalidSpec, "Minnesota tightness parameters must be positive");
  const Index k = static_cast<Index>(layout.size());
  ControlsPrior prior;
  prior.tightness = tightness;
  prior.mean = MatrixXd::Zero(k, horizons);
  prior.variance.resize(k);
  for (Index j = 0; j < k; ++j) {
    const auto& c = layout[j];
    const double p2 = static_cast<double>(c.lag) * static_cast<double>(c.lag);
    switch (c.role) {
      case ControlRole::OwnLag:
        prior.variance[j] = tightness.kappa_own / p2;
        if (levels && c.lag == 1) prior.mean.row(j).setOnes();
        break;
      case ControlRole::CrossLag:
        prior.variance[j] = tightness.kappa_cross / p2;
        break;
      case ControlRole::Contemporaneous:
      case ControlRole::Deterministic:
        prior.variance[j] = tightness.kappa_det;
        break;
    }
  }
  return prior;
}

CovPrior default_cov_prior(Index horizons, double scale) {
  CovPrior prior;
  prior.scale = scale;
  prior.s0 = static_cast<double>(horizons) + 2.0;
  prior.S0 = MatrixXd::Identity(horizons, horizons) * (scale * (prior.s0 - static_cast<double>(horizons) - 1.0));
  return prior;
}

double MeasurementPrior::resolved_s0_nu(Index n_instruments) const {
  return s0_nu > 0.0 ? s0_nu : static_cast<double>(n_instruments) + 4.0;
}

MatrixXd MeasurementPrior::resolved_S0_nu(Index n_instruments) const {
  if (S0_nu.rows() == n_instruments && S0_nu.cols() == n_instruments) return S0_nu;
  const double dof = resolved_s0_nu(n_instruments);
  const double mean = b_nu / (a_nu - 1.0);
  return MatrixXd::Identity(n_instruments, n_instruments) * (mean * (dof - static_cast<double>(n_instruments) - 1.0));
}

HyperParams default_hyperparameters(Index horizons) {
  if (horizons < 1) throw DataError(DataError::Kind::InvalidSpec, "need at least one horizon");
  HyperParams hp;
  hp.ng.lambda2 = VectorXd::Ones(horizons);
  hp.cov = default_cov_prior(horizons, 1.0);
  return hp;
}

nlohmann::json to_json(const HyperParams& hp) {
  using nlohmann::json;
  const auto& k = hp.kernel;
  json out;
  out["irf_prior"] = hp.irf_prior == IrfPrior::GaussianProcess ? "gp" : "flat";
  out["flat_variance"] = hp.flat_variance;
  out["kernel"] = {{"xi_bounds", {k.xi_low, k.xi_high}},
                   {"varsigma_bounds", {k.varsigma_low, k.varsigma_high}},
                   {"m_xi", k.m_xi},
                   {"v_xi", k.v_xi},
                   {"m_varsigma", k.m_varsigma},
                   {"v_varsigma", k.v_varsigma}};
  out["ng"] = {{"a_tau", hp.ng.a_tau}, {"b_tau", hp.ng.b_tau}, {"theta", hp.ng.theta}};
  out["minnesota"] = {{"kappa_own", hp.minnesota.kappa_own},
                      {"kappa_cross", hp.minnesota.kappa_cross},
                      {"kappa_det", hp.minnesota.kappa_det}};
  out["cov"] = {{"s0", hp.cov.s0}, {"scale", hp.cov.scale}};
  const auto& m = hp.measurement;
  out["measurement"] = {{"phi_mean", m.phi_mean}, {"phi_var", m.phi_var}, {"phi_positive", m.phi_positive},
                        {"delta_var", m.delta_var}, {"a_nu", m.a_nu},       {"b_nu", m.b_nu}};
  out["sv"] = {{"rho_mean", hp.sv.rho_mean}, {"rho_var", hp.sv.rho_var}, {"a_vol", hp.sv.a_vol}, {"b_vol", hp.sv.b_vol}};
  return out;
}

}  // namespace sulp
