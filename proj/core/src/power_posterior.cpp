#include "sulp/power_posterior.hpp"

#include "sulp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sulp {

VectorXd importance_weights(const VectorXd& loglik, double c) {
  if (!(c > 0.0 && c <= 1.0))
    throw NumericalError(NumericalError::Kind::Degenerate, "learning rate c must lie in (0, 1]");
  const Index S = loglik.size();
  if (S == 0) throw NumericalError(NumericalError::Kind::Degenerate, "no draws to weight");
  if (c == 1.0) return VectorXd::Constant(S, 1.0 / static_cast<double>(S));

  double top = -std::numeric_limits<double>::infinity();
  for (Index s = 0; s < S; ++s)
    if (std::isfinite(loglik[s])) top = std::max(top, (c - 1.0) * loglik[s]);
  if (!std::isfinite(top))
    throw NumericalError(NumericalError::Kind::Degenerate, "all log-likelihood values are non-finite");
  VectorXd w(S);
  for (Index s = 0; s < S; ++s) w[s] = std::isfinite(loglik[s]) ? std::exp((c - 1.0) * loglik[s] - top) : 0.0;
  return w / w.sum();
}

double effective_sample_size(const VectorXd& weights) { return 1.0 / weights.squaredNorm(); }

WeightedChain reweight(const Chain& chain, double c, double ess_floor) {
  WeightedChain out;
  out.c = c;
  out.weights = importance_weights(chain.log_lik, c);
  out.ess = effective_sample_size(out.weights);
  const double floor = ess_floor * static_cast<double>(chain.draws());
  if (out.ess < floor) {
    std::ostringstream msg;
    msg << "effective sample size " << out.ess << " below " << floor << " at c=" << c;
    out.warning = msg.str();
  }
  return out;
}

std::vector<Index> resample_indices(const VectorXd& weights, Index n_out, Rng& rng) {
  std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
  double cum = 0.0;
  for (Index s = 0; s < weights.size(); ++s) cdf[s] = (cum += weights[s]);
  std::vector<Index> idx(static_cast<std::size_t>(n_out));
  for (auto& i : idx) {
    const double u = rng.uniform() * cum;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    i = std::min<Index>(static_cast<Index>(it - cdf.begin()), weights.size() - 1);
  }
  return idx;
}

Chain resample(const Chain& chain, const VectorXd& weights, Index n_out, Rng& rng) {
  const auto idx = resample_indices(weights, n_out, rng);
  Chain out = chain;
  auto subset = [&](MatrixXd& m, const MatrixXd& src) {
    if (src.rows() == 0) return;
    m.resize(n_out, src.cols());
    for (Index r = 0; r < n_out; ++r) m.row(r) = src.row(idx[r]);
  };
  subset(out.beta, chain.beta);
  subset(out.mu_beta, chain.mu_beta);
  subset(out.v_beta, chain.v_beta);
  subset(out.xi, chain.xi);
  subset(out.varsigma, chain.varsigma);
  subset(out.tau2_tilde, chain.tau2_tilde);
  subset(out.sigma_u, chain.sigma_u);
  subset(out.gamma, chain.gamma);
  subset(out.phi, chain.phi);
  subset(out.sigma2_nu, chain.sigma2_nu);
  subset(out.x, chain.x);
  subset(out.logvol, chain.logvol);
  out.log_lik.resize(n_out);
  for (Index r = 0; r < n_out; ++r) out.log_lik[r] = chain.log_lik[idx[r]];
  return out;
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int i = 80; i <= 100; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

}  // namespace sulp
