#pragma once

#include "sulp/rng.hpp"
#include "sulp/sampler.hpp"

#include <optional>
#include <string>

namespace sulp {

/// w_s proportional to exp((c - 1) loglik_s), normalized after subtracting the
/// maximum exponent. Throws NumericalError::Degenerate if c is outside (0, 1]
/// or no log-likelihood is finite.
VectorXd importance_weights(const VectorXd& loglik, double c);

/// 1 / sum w_s^2 for normalized weights.
double effective_sample_size(const VectorXd& weights);

struct WeightedChain {
  double c = 1.0;
  VectorXd weights;
  double ess = 0.0;
  /// Set when ESS falls below ess_floor * S.
  std::optional<std::string> warning;
};

WeightedChain reweight(const Chain& chain, double c, double ess_floor = 0.01);

/// Multinomial resampling: indices of n_out stored draws.
std::vector<Index> resample_indices(const VectorXd& weights, Index n_out, Rng& rng);

/// Chain made of the resampled draws (all per-draw blocks subset).
Chain resample(const Chain& chain, const VectorXd& weights, Index n_out, Rng& rng);

/// The canonical grid 0.80, 0.81, ..., 1.00.
std::vector<double> default_c_grid();

}  // namespace sulp
