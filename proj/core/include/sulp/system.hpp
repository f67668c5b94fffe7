#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sulp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// What a column of the control matrix Z represents. Drives the
/// Minnesota-style prior on the control coefficients.
enum class ControlRole {
  Contemporaneous,  // r_t
  OwnLag,           // lag of the target
  CrossLag,         // lag of any other variable
  Deterministic,    // intercept or trend
};

struct ControlColumn {
  std::string name;
  ControlRole role;
  int lag = 0;  // 0 for contemporaneous and deterministic columns
};

/// One structural shock: either observed directly, or latent and measured by
/// one or more instruments.
struct ShockInfo {
  std::string name;
  bool latent = false;
  std::vector<Index> instruments;  // columns of SULPSystem::instruments
};

/// Stacked seemingly-unrelated LP design, Y = X B + Z Gamma + U.
///
/// Row t of `response` holds the H leads of the target for origin t (or long
/// differences of them). Entries listed in `missing` are NaN as built and are
/// imputed by the sampler.
struct SULPSystem {
  MatrixXd response;     // T x H
  MatrixXd shocks;       // T x n_x; observed shock values, latent columns hold initial values
  MatrixXd instruments;  // T x n_M; empty when no shock is instrumented
  MatrixXd controls;     // T x k
  std::vector<ControlColumn> control_layout;
  std::vector<ShockInfo> shock_info;
  std::vector<std::string> instrument_names;
  std::vector<std::string> origin_labels;

  /// Missing (t, h) cells, grouped by row: missing_by_row[t] lists h's.
  std::vector<std::vector<Index>> missing_by_row;

  bool stochastic_volatility = false;
  bool correlated_measurement_errors = false;

  Index rows() const { return response.rows(); }
  Index horizons() const { return response.cols(); }
  Index n_shocks() const { return shocks.cols(); }
  Index n_controls() const { return controls.cols(); }
  Index n_instruments() const { return instruments.cols(); }
  Index missing_count() const;
  bool has_latent_shocks() const;
  /// Index of the shock an instrument column measures.
  Index instrument_owner(Index instrument) const;
};

}  // namespace sulp
