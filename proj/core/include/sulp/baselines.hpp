#pragma once

#include "sulp/system.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace sulp {

/// Point estimates and standard errors per horizon from a classical LP.
struct ClassicalLPResult {
  VectorXd beta_hat;           // H
  VectorXd se;                 // H
  std::vector<int> bandwidth;  // HAC truncation lag used per horizon
  double lambda = 0.0;         // smoothing penalty (smooth LP only)
  std::vector<double> cv_grid; // candidate penalties (smooth LP only)
  std::vector<double> cv_loss; // held-out loss per candidate

  /// Symmetric Gaussian interval beta_hat -/+ z se at the given level.
  std::pair<VectorXd, VectorXd> ci(double level) const;
};

/// Per-horizon OLS of y_{t+h} on (x_t, z_t) over complete-case rows with
/// Newey-West (Bartlett) standard errors, truncation lag h unless
/// `bandwidth` is given. Uses shock column `shock` of the system.
ClassicalLPResult ols_lp_hac(const SULPSystem& system, Index shock = 0, std::optional<int> bandwidth = std::nullopt);

/// HAC covariance of the rows of `scores` (T x p) with Bartlett weights
/// 1 - l/(L+1). L = 0 gives the heteroskedasticity-only sum of outer products.
MatrixXd newey_west(const MatrixXd& scores, int lag);

struct SmoothLPOptions {
  int order = 2;               // penalized difference order r
  std::vector<double> lambda_grid;  // empty: default grid scaled by mean(x'x)
  int folds = 5;
  std::optional<double> lambda;     // skip cross-validation when set
};

/// Penalized LP: controls are partialled out per horizon, then
/// sum_h ||y~_h - x~_h b_h||^2 + lambda ||D_r b||^2 is minimized jointly.
/// lambda is chosen by contiguous blocked K-fold cross-validation. Standard
/// errors come from a sandwich with a Newey-West middle (lag H~).
ClassicalLPResult smooth_lp(const SULPSystem& system, const SmoothLPOptions& options = {}, Index shock = 0);

/// r-th order difference matrix of size (H - r) x H.
MatrixXd difference_matrix(Index horizons, int order);

}  // namespace sulp
