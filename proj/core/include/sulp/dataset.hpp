#pragma once

#include "sulp/system.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sulp {

/// Named numeric columns over an ordered time index. Missing cells are NaN.
struct TimeSeriesDataset {
  std::vector<std::string> names;
  MatrixXd values;  // T_raw x n_cols
  std::vector<std::string> time_index;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  /// Column position by name; throws DataError::MissingColumn.
  Index column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  bool is_missing(Index row, Index col) const;
  /// Append a column; throws DataError::DuplicateColumn.
  void add_column(const std::string& name, const VectorXd& column);
};

struct ColumnScale {
  double mean = 0.0;
  double std = 1.0;
};

struct ScalingInfo {
  std::map<std::string, ColumnScale> columns;

  /// Throws DataError::MissingColumn when no entry exists.
  const ColumnScale& at(const std::string& name) const;
};

TimeSeriesDataset load_csv(const std::filesystem::path& path, const std::string& time_column);
TimeSeriesDataset parse_csv(std::istream& in, const std::string& time_column);
void write_csv(const TimeSeriesDataset& data, const std::filesystem::path& path,
               const std::string& time_column = "time");

/// Center and scale every column to sample mean 0 and sample std 1 (T-1
/// denominator, missing cells ignored).
std::pair<TimeSeriesDataset, ScalingInfo> standardize(const TimeSeriesDataset& data);
TimeSeriesDataset unstandardize(const TimeSeriesDataset& data, const ScalingInfo& scaling);

/// First principal component of the given (already standardized) columns over
/// rows where all are observed; other rows are NaN. The sign is fixed so the
/// loading on the first column is positive.
VectorXd first_principal_component(const TimeSeriesDataset& data, const std::vector<std::string>& columns);

struct ShockSpec {
  std::string name;
  std::string observed_column;           // set for an observed shock
  std::vector<std::string> instruments;  // set for a latent shock
};

/// Column roles and dimensions of a SU-LP design.
struct DesignSpec {
  std::string target;
  std::vector<ShockSpec> shocks;
  std::vector<std::string> contemporaneous_columns;  // r_t: enters at t and with lags
  std::vector<std::string> lagged_columns;           // s_t: enters with lags only
  bool lag_target = true;  // include lags of the target in z_t
  bool lag_shocks = true;  // include lags of observed shocks / instruments in z_t
  int lags = 1;            // P
  int max_horizon = 0;     // H~, so H = H~ + 1
  bool long_differences = false;
  bool include_intercept = true;
  bool include_trend = false;
  bool target_in_levels = false;  // Minnesota prior mean on the first own lag
  bool stochastic_volatility = false;
  bool correlated_measurement_errors = false;

  int horizons() const { return max_horizon + 1; }
  /// Throws DataError::InvalidSpec on violated invariants.
  void validate() const;
};

/// Build the stacked design. Origins run over every t with P lags available
/// (one more with long differences); leads past the end of the sample, and
/// missing target cells, are recorded as missing entries. Rows whose
/// regressors contain missing cells are dropped.
SULPSystem build_design(const TimeSeriesDataset& data, const DesignSpec& spec);

/// Convert standardized IRF draws to original units: multiply by the target's
/// std and divide by `shock_scale` (the std of an observed shock column, or 1
/// for latent shocks that have unit unconditional variance).
MatrixXd rescale_irf(const MatrixXd& draws, const ScalingInfo& scaling, const std::string& target,
                     double shock_scale = 1.0);

}  // namespace sulp
