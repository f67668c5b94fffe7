#include "sulp/errors.hpp"
#include "sulp/sampler.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>

namespace sulp {
namespace {

// Seven-component normal mixture approximating log chi^2_1.
constexpr std::array<double, 7> kMixProb = {0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750};
constexpr std::array<double, 7> kMixMean = {-10.12999 - 1.2704, -3.97281 - 1.2704, -8.56686 - 1.2704,
                                            2.77786 - 1.2704,   0.61942 - 1.2704,  1.79518 - 1.2704,
                                            -1.08819 - 1.2704};
constexpr std::array<double, 7> kMixVar = {5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261};

constexpr double kOffset = 1e-12;

}  // namespace

VectorXd ffbs_logvol(const VectorXd& ystar, const VectorXd& mix_mean, const VectorXd& mix_var, double rho,
                     double vol_var, Rng& rng) {
  const Index T = ystar.size();
  VectorXd filt_mean(T);
  VectorXd filt_var(T);
  double pred_mean = 0.0;
  double pred_var = vol_var / (1.0 - rho * rho);
  for (Index t = 0; t < T; ++t) {
    const double gain = pred_var / (pred_var + mix_var[t]);
    filt_mean[t] = pred_mean + gain * (ystar[t] - mix_mean[t] - pred_mean);
    filt_var[t] = (1.0 - gain) * pred_var;
    pred_mean = rho * filt_mean[t];
    pred_var = rho * rho * filt_var[t] + vol_var;
  }
  VectorXd h(T);
  h[T - 1] = filt_mean[T - 1] + std::sqrt(filt_var[T - 1]) * rng.normal();
  for (Index t = T - 2; t >= 0; --t) {
    const double denom = rho * rho * filt_var[t] + vol_var;
    const double c = filt_var[t] * rho / denom;
    const double mean = filt_mean[t] + c * (h[t + 1] - rho * filt_mean[t]);
    const double var = std::max(filt_var[t] - c * rho * filt_var[t], 0.0);
    h[t] = mean + std::sqrt(var) * rng.normal();
  }
  return h;
}

void draw_sv(ChainState& state, Index shock, const SVPrior& prior, Rng& rng) {
  const Index T = state.x.rows();
  auto& sv = state.sv;
  double rho = sv.rho[shock];
  double vol_var = sv.vol_var[shock];

  VectorXd ystar(T);
  VectorXd mix_mean(T);
  VectorXd mix_var(T);
  std::array<double, 7> logp{};
  for (Index t = 0; t < T; ++t) {
    const double xv = state.x(t, shock);
    ystar[t] = std::log(xv * xv + kOffset);
    const double resid = ystar[t] - sv.logvol(t, shock);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < 7; ++j) {
      const double d = resid - kMixMean[j];
      logp[j] = std::log(kMixProb[j]) - 0.5 * std::log(kMixVar[j]) - 0.5 * d * d / kMixVar[j];
      top = std::max(top, logp[j]);
    }
    double total = 0.0;
    for (double& lp : logp) total += (lp = std::exp(lp - top));
    double u = rng.uniform() * total;
    std::size_t pick = 6;
    for (std::size_t j = 0; j < 7; ++j) {
      if (u < logp[j]) {
        pick = j;
        break;
      }
      u -= logp[j];
    }
    mix_mean[t] = kMixMean[pick];
    mix_var[t] = kMixVar[pick];
  }

  const VectorXd h = ffbs_logvol(ystar, mix_mean, mix_var, rho, vol_var, rng);
  sv.logvol.col(shock) = h;

  // rho: Gaussian regression posterior on t >= 2 as a proposal, corrected for
  // the stationary density of the first state.
  double sxx = 0.0;
  double sxy = 0.0;
  for (Index t = 1; t < T; ++t) {
    sxx += h[t - 1] * h[t - 1];
    sxy += h[t - 1] * h[t];
  }
  const double prec = sxx / vol_var + 1.0 / prior.rho_var;
  const double mean = (sxy / vol_var + prior.rho_mean / prior.rho_var) / prec;
  const double proposal = truncated_normal(mean, std::sqrt(1.0 / prec), -1.0 + 1e-8, 1.0 - 1e-8, rng);
  auto log_init = [&](double r) {
    const double var = vol_var / (1.0 - r * r);
    return -0.5 * std::log(var) - 0.5 * h[0] * h[0] / var;
  };
  if (std::log(rng.uniform()) < log_init(proposal) - log_init(rho)) rho = proposal;

  double ss = h[0] * h[0] * (1.0 - rho * rho);
  for (Index t = 1; t < T; ++t) {
    const double e = h[t] - rho * h[t - 1];
    ss += e * e;
  }
  vol_var = rng.inverse_gamma(prior.a_vol + 0.5 * static_cast<double>(T), prior.b_vol + 0.5 * ss);

  sv.rho[shock] = rho;
  sv.vol_var[shock] = vol_var;
}

}  // namespace sulp
