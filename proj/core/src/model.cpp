#include "sulp/model.hpp"

#include "sulp/errors.hpp"
#include "sulp/linalg.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace sulp {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Cholesky sigma_factor(const MatrixXd& sigma, const char* what) {
  try {
    return cholesky(sigma);
  } catch (const NumericalError&) {
    throw NumericalError(NumericalError::Kind::NotSPD, std::string(what) + " is not positive definite");
  }
}

}  // namespace

double ChainState::shock_variance(Index t, Index shock) const {
  if (sv.logvol.size() == 0) return 1.0;
  return std::exp(sv.logvol(t, shock));
}

MatrixXd residuals(const SULPSystem& system, const ChainState& state) {
  MatrixXd u = state.y - state.x * state.beta;
  if (system.n_controls() > 0) u.noalias() -= system.controls * state.gamma;
  return u;
}

double log_measurement_likelihood(const SULPSystem& system, const ChainState& state) {
  const Index n_m = system.n_instruments();
  if (n_m == 0) return 0.0;
  const Index T = system.rows();
  const auto& ms = state.measurement;
  MatrixXd nu = system.instruments;
  if (system.n_controls() > 0) nu.noalias() -= system.controls * ms.delta;
  for (Index j = 0; j < n_m; ++j) nu.col(j) -= ms.phi[j] * state.x.col(system.instrument_owner(j));

  if (system.correlated_measurement_errors) {
    const Cholesky chol = sigma_factor(ms.Sigma_nu, "Sigma_nu");
    const MatrixXd z = chol.lower.triangularView<Eigen::Lower>().solve(nu.transpose());
    return -0.5 * static_cast<double>(T) * (static_cast<double>(n_m) * kLog2Pi + chol.log_det()) -
           0.5 * z.squaredNorm();
  }
  double ll = 0.0;
  for (Index j = 0; j < n_m; ++j) {
    const double s2 = ms.sigma2_nu[j];
    ll += -0.5 * static_cast<double>(T) * (kLog2Pi + std::log(s2)) - 0.5 * nu.col(j).squaredNorm() / s2;
  }
  return ll;
}

double log_pseudo_likelihood(const SULPSystem& system, const ChainState& state) {
  const Index T = system.rows();
  const Index H = system.horizons();
  const Cholesky chol = sigma_factor(state.sigma_u, "Sigma_u");
  const MatrixXd u = residuals(system, state);
  const MatrixXd z = chol.lower.triangularView<Eigen::Lower>().solve(u.transpose());
  const double ll = -0.5 * static_cast<double>(T) * (static_cast<double>(H) * kLog2Pi + chol.log_det()) -
                    0.5 * z.squaredNorm();
  return ll + log_measurement_likelihood(system, state);
}

double log_observed_pseudo_likelihood(const SULPSystem& system, const ChainState& state) {
  return log_observed_pseudo_likelihood(system, state, residuals(system, state));
}

double log_observed_pseudo_likelihood(const SULPSystem& system, const ChainState& state, const MatrixXd& u) {
  const Index T = system.rows();
  const Index H = system.horizons();
  const Cholesky chol = sigma_factor(state.sigma_u, "Sigma_u");

  double ll = 0.0;
  Index complete = 0;
  MatrixXd complete_resid(H, T);
  std::map<std::vector<Index>, Cholesky> marginal_factors;
  for (Index t = 0; t < T; ++t) {
    const auto& miss = system.missing_by_row[t];
    if (miss.empty()) {
      complete_resid.col(complete++) = u.row(t).transpose();
      continue;
    }
    if (static_cast<Index>(miss.size()) == H) continue;
    std::vector<Index> obs;
    for (Index h = 0, m = 0; h < H; ++h) {
      if (m < static_cast<Index>(miss.size()) && miss[m] == h) {
        ++m;
        continue;
      }
      obs.push_back(h);
    }
    auto it = marginal_factors.find(obs);
    if (it == marginal_factors.end()) {
      const Index n = static_cast<Index>(obs.size());
      MatrixXd s(n, n);
      for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) s(a, b) = state.sigma_u(obs[a], obs[b]);
      it = marginal_factors.emplace(obs, sigma_factor(s, "Sigma_u block")).first;
    }
    VectorXd r(static_cast<Index>(obs.size()));
    for (Index a = 0; a < r.size(); ++a) r[a] = u(t, obs[a]);
    ll += mvn_log_density(r, VectorXd::Zero(r.size()), it->second);
  }
  if (complete > 0) {
    const MatrixXd z = chol.lower.triangularView<Eigen::Lower>().solve(complete_resid.leftCols(complete));
    ll += -0.5 * static_cast<double>(complete) * (static_cast<double>(H) * kLog2Pi + chol.log_det()) -
          0.5 * z.squaredNorm();
  }
  return ll + log_measurement_likelihood(system, state);
}

double relevance_statistic(double phi, double shock_variance, double sigma2_nu) {
  const double signal = phi * phi * shock_variance;
  const double total = signal + sigma2_nu;
  return total > 0.0 ? signal / total : 1.0;
}

double relevance_statistic(const SULPSystem& system, const ChainState& state, Index instrument, Index t) {
  if (system.n_instruments() == 0)
    throw DataError(DataError::Kind::InvalidSpec, "relevance statistic requires modeled instruments");
  const Index owner = system.instrument_owner(instrument);
  const auto& ms = state.measurement;
  const double s2nu = system.correlated_measurement_errors ? ms.Sigma_nu(instrument, instrument) : ms.sigma2_nu[instrument];
  return relevance_statistic(ms.phi[instrument], state.shock_variance(t, owner), s2nu);
}

}  // namespace sulp
