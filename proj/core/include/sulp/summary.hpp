#pragma once

#include "sulp/sampler.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sulp {

/// Weighted quantile with midpoint plotting positions: sorted value i sits
/// at cumulative weight W_{i-1} + w_i / 2, linearly interpolated and clamped
/// at the ends. With equal weights this is the (i - 1/2)/n rule.
double weighted_quantile(const VectorXd& values, const VectorXd& weights, double p);
/// Several quantiles at once, sorting only once.
VectorXd weighted_quantiles(const VectorXd& values, const VectorXd& weights, const std::vector<double>& probs);

inline const std::vector<double> kSummaryLevels = {0.05, 0.16, 0.50, 0.84, 0.95};

/// Per-horizon posterior summary of an n_x x H block of draws.
struct IRFSummary {
  std::vector<std::string> shocks;
  std::vector<double> levels;
  MatrixXd mean;                   // n_x x H
  MatrixXd sd;                     // n_x x H
  std::vector<MatrixXd> quantiles; // one n_x x H matrix per level

  Index n_shocks() const { return mean.rows(); }
  Index horizons() const { return mean.cols(); }
  /// Quantile matrix for a level present in `levels`.
  const MatrixXd& at_level(double level) const;
};

/// Summarize draws stored shock-major (S x n_x*H). `scale` multiplies every
/// draw of shock i by scale[i] (empty = no rescaling).
IRFSummary summarize_draws(const MatrixXd& draws, Index n_shocks, Index horizons, const VectorXd& weights,
                           const std::vector<std::string>& shock_names, const VectorXd& scale = {},
                           const std::vector<double>& levels = kSummaryLevels);

/// shock,h,mean,q05,q16,q50,q84,q95 with 17 significant digits.
void write_irf_csv(const IRFSummary& summary, const std::filesystem::path& path);

}  // namespace sulp
