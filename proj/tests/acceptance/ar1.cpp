#include "criteria.hpp"

#include <sulp/dataset.hpp>
#include <sulp/dgp.hpp>
#include <sulp/sampler.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

namespace sulp::acceptance {

Outcome ar1_recovery() {
  const double rho = 0.8;
  const Index T = 500;
  const int max_h = 8;
  Rng rng(20240601, {1});
  const AR1Path path = simulate_ar1(rho, T + 1, rng);

  // Response w_{t+1+h} on the shock w_t, so the coefficient is rho^{h+1}.
  TimeSeriesDataset data;
  data.names = {"w_next", "w"};
  data.values.resize(T, 2);
  data.values.col(0) = path.w.tail(T);
  data.values.col(1) = path.w.head(T);
  for (Index t = 0; t < T; ++t) data.time_index.push_back(std::to_string(t));
  const auto [std_data, scaling] = standardize(data);

  DesignSpec spec;
  spec.target = "w_next";
  spec.shocks = {ShockSpec{"w", "w", {}}};
  spec.lag_target = false;
  spec.lag_shocks = false;
  spec.lags = 1;
  spec.max_horizon = max_h;
  const SULPSystem system = build_design(std_data, spec);
  const Index H = system.horizons();

  SamplerConfig config;
  config.seed = 11;
  const auto start = std::chrono::steady_clock::now();
  const Chain chain = run_sampler(system, default_hyperparameters(H),
                                  minnesota_controls_prior(system.control_layout, H, false), config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const MatrixXd draws = rescale_irf(chain.beta, scaling, "w_next", scaling.at("w").std);
  double worst = 0.0;
  bool ok = true;
  for (Index h = 0; h < H; ++h) {
    const VectorXd d = draws.col(h);
    const double mean = d.mean();
    const double sd = std::sqrt((d.array() - mean).square().sum() / static_cast<double>(d.size() - 1));
    const double z = std::abs(mean - std::pow(rho, static_cast<double>(h + 1))) / sd;
    worst = std::max(worst, z);
    ok = ok && z <= 3.0;
  }
  const bool fast = secs < 120.0;
  std::ostringstream msg;
  msg << "max |mean - rho^(h+1)| / sd = " << worst << " over " << H << " horizons; " << config.n_draws
      << " sweeps in " << secs << "s";
  return {ok && fast, msg.str()};
}

}  // namespace sulp::acceptance
