#include "sulp/dataset.hpp"

#include "sulp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace sulp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cell.push_back(ch);
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// Numeric labels compare numerically, everything else lexicographically.
bool label_less(const std::string& a, const std::string& b) {
  const auto na = parse_number(a);
  const auto nb = parse_number(b);
  if (na && nb) return *na < *nb;
  return a < b;
}

double sample_mean(const VectorXd& v, Index& count) {
  double sum = 0.0;
  count = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v[i])) continue;
    sum += v[i];
    ++count;
  }
  return count > 0 ? sum / static_cast<double>(count) : kNaN;
}

}  // namespace

Index SULPSystem::missing_count() const {
  Index n = 0;
  for (const auto& row : missing_by_row) n += static_cast<Index>(row.size());
  return n;
}

bool SULPSystem::has_latent_shocks() const {
  return std::any_of(shock_info.begin(), shock_info.end(), [](const ShockInfo& s) { return s.latent; });
}

Index SULPSystem::instrument_owner(Index instrument) const {
  for (Index i = 0; i < static_cast<Index>(shock_info.size()); ++i) {
    const auto& list = shock_info[i].instruments;
    if (std::find(list.begin(), list.end(), instrument) != list.end()) return i;
  }
  return -1;
}

Index TimeSeriesDataset::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError(DataError::Kind::MissingColumn, "column '" + name + "' not found");
  return static_cast<Index>(it - names.begin());
}

bool TimeSeriesDataset::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

bool TimeSeriesDataset::is_missing(Index row, Index col) const { return std::isnan(values(row, col)); }

void TimeSeriesDataset::add_column(const std::string& name, const VectorXd& column) {
  if (has_column(name)) throw DataError(DataError::Kind::DuplicateColumn, "duplicate column '" + name + "'");
  if (column.size() != rows())
    throw DataError(DataError::Kind::RaggedRow, "column '" + name + "' has the wrong length");
  values.conservativeResize(Eigen::NoChange, cols() + 1);
  values.col(cols() - 1) = column;
  names.push_back(name);
}

const ColumnScale& ScalingInfo::at(const std::string& name) const {
  const auto it = columns.find(name);
  if (it == columns.end()) throw DataError(DataError::Kind::MissingColumn, "no scaling entry for '" + name + "'");
  return it->second;
}

TimeSeriesDataset parse_csv(std::istream& in, const std::string& time_column) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(DataError::Kind::Schema, "empty CSV input: header row required");
  const auto header = split_row(line);

  Index time_pos = -1;
  std::set<std::string> seen;
  for (Index i = 0; i < static_cast<Index>(header.size()); ++i) {
    if (!seen.insert(header[i]).second)
      throw DataError(DataError::Kind::DuplicateColumn, "duplicate column '" + header[i] + "'");
    if (header[i] == time_column) time_pos = i;
  }
  if (time_pos < 0) throw DataError(DataError::Kind::MissingColumn, "time column '" + time_column + "' not found");

  TimeSeriesDataset data;
  for (Index i = 0; i < static_cast<Index>(header.size()); ++i)
    if (i != time_pos) data.names.push_back(header[i]);

  std::vector<std::vector<double>> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw DataError(DataError::Kind::RaggedRow, "line " + std::to_string(line_no) + ": expected " +
                                                      std::to_string(header.size()) + " cells, found " +
                                                      std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (Index i = 0; i < static_cast<Index>(cells.size()); ++i) {
      if (i == time_pos) continue;
      const std::string& cell = cells[i];
      if (cell.empty() || cell == "NA") {
        row.push_back(kNaN);
        continue;
      }
      const auto value = parse_number(cell);
      if (!value)
        throw DataError(DataError::Kind::BadCell, "line " + std::to_string(line_no) + ": non-numeric cell '" + cell +
                                                      "' in column '" + header[i] + "'");
      row.push_back(*value);
    }
    const std::string& label = cells[time_pos];
    if (!data.time_index.empty() && !label_less(data.time_index.back(), label))
      throw DataError(DataError::Kind::NonMonotoneTime,
                      "line " + std::to_string(line_no) + ": time index '" + label + "' is not increasing");
    data.time_index.push_back(label);
    rows.push_back(std::move(row));
  }

  data.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(data.names.size()));
  for (Index r = 0; r < data.values.rows(); ++r)
    for (Index c = 0; c < data.values.cols(); ++c) data.values(r, c) = rows[r][c];
  return data;
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const std::string& time_column) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::MissingFile, "cannot open '" + path.string() + "'");
  return parse_csv(in, time_column);
}

void write_csv(const TimeSeriesDataset& data, const std::filesystem::path& path, const std::string& time_column) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + path.string() + "'");
  out << time_column;
  for (const auto& n : data.names) out << ',' << n;
  out << '\n' << std::setprecision(17);
  for (Index r = 0; r < data.rows(); ++r) {
    out << (r < static_cast<Index>(data.time_index.size()) ? data.time_index[r] : std::to_string(r + 1));
    for (Index c = 0; c < data.cols(); ++c) {
      out << ',';
      if (data.is_missing(r, c))
        out << "NA";
      else
        out << data.values(r, c);
    }
    out << '\n';
  }
}

std::pair<TimeSeriesDataset, ScalingInfo> standardize(const TimeSeriesDataset& data) {
  TimeSeriesDataset out = data;
  ScalingInfo scaling;
  for (Index c = 0; c < data.cols(); ++c) {
    const VectorXd col = data.values.col(c);
    Index n = 0;
    const double mean = sample_mean(col, n);
    double ss = 0.0;
    for (Index i = 0; i < col.size(); ++i)
      if (!std::isnan(col[i])) ss += (col[i] - mean) * (col[i] - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
      throw DataError(DataError::Kind::ConstantColumn, "column '" + data.names[c] + "' is constant");
    out.values.col(c) = (col.array() - mean) / sd;
    scaling.columns[data.names[c]] = ColumnScale{mean, sd};
  }
  return {std::move(out), std::move(scaling)};
}

TimeSeriesDataset unstandardize(const TimeSeriesDataset& data, const ScalingInfo& scaling) {
  TimeSeriesDataset out = data;
  for (Index c = 0; c < data.cols(); ++c) {
    const auto& s = scaling.at(data.names[c]);
    out.values.col(c) = data.values.col(c).array() * s.std + s.mean;
  }
  return out;
}

VectorXd first_principal_component(const TimeSeriesDataset& data, const std::vector<std::string>& columns) {
  if (columns.empty()) throw DataError(DataError::Kind::InvalidSpec, "principal component needs at least one column");
  std::vector<Index> idx;
  for (const auto& c : columns) idx.push_back(data.column(c));
  std::vector<Index> complete;
  for (Index r = 0; r < data.rows(); ++r) {
    bool ok = true;
    for (Index c : idx) ok = ok && !data.is_missing(r, c);
    if (ok) complete.push_back(r);
  }
  if (complete.size() < 2) throw DataError(DataError::Kind::InsufficientSample, "too few complete rows for a principal component");
  MatrixXd m(static_cast<Index>(complete.size()), static_cast<Index>(idx.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = data.values(complete[i], idx[j]);
  const VectorXd mean = m.colwise().mean();
  m.rowwise() -= mean.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m.transpose() * m);
  VectorXd loading = eig.eigenvectors().col(m.cols() - 1);
  if (loading[0] < 0.0) loading = -loading;

  VectorXd pc = VectorXd::Constant(data.rows(), kNaN);
  for (Index i = 0; i < m.rows(); ++i) pc[complete[i]] = m.row(i).dot(loading);
  return pc;
}

void DesignSpec::validate() const {
  auto fail = [](const std::string& what) { throw DataError(DataError::Kind::InvalidSpec, what); };
  if (target.empty()) fail("design: target column is required");
  if (lags < 1) fail("design: lag order must be at least 1");
  if (max_horizon < 0) fail("design: max_horizon must be non-negative");
  if (shocks.empty()) fail("design: at least one shock is required");
  for (const auto& s : shocks) {
    const bool observed = !s.observed_column.empty();
    const bool instrumented = !s.instruments.empty();
    if (observed == instrumented)
      fail("design: shock '" + s.name + "' must have either an observed column or instruments, not both");
  }
  auto contains = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  if (contains(contemporaneous_columns, target) || contains(lagged_columns, target))
    fail("design: target '" + target + "' must not be listed among the controls");
  if (correlated_measurement_errors) {
    for (const auto& s : shocks)
      if (s.instruments.size() > 1)
        fail("design: correlated measurement errors require one instrument per shock");
  }
}

SULPSystem build_design(const TimeSeriesDataset& data, const DesignSpec& spec) {
  spec.validate();
  const Index n_raw = data.rows();
  const int P = spec.lags;
  const int H = spec.horizons();
  if (n_raw < P + spec.max_horizon + 2 + (spec.long_differences ? 1 : 0))
    throw DataError(DataError::Kind::InsufficientSample,
                    "design: need at least P + H~ + 2 observations, have " + std::to_string(n_raw));

  const Index target = data.column(spec.target);

  // Variables that enter z_t with lags, in order: target, shocks or
  // instruments, contemporaneous controls, lag-only controls.
  std::vector<std::string> lagged;
  auto push_unique = [&](const std::string& n) {
    if (std::find(lagged.begin(), lagged.end(), n) == lagged.end()) lagged.push_back(n);
  };
  if (spec.lag_target) push_unique(spec.target);
  if (spec.lag_shocks) {
    for (const auto& s : spec.shocks) {
      if (!s.observed_column.empty()) push_unique(s.observed_column);
      for (const auto& m : s.instruments) push_unique(m);
    }
  }
  for (const auto& r : spec.contemporaneous_columns) push_unique(r);
  for (const auto& s : spec.lagged_columns) push_unique(s);

  struct Source {
    Index column;  // -1 for deterministic
    int lag;
    ControlColumn info;
  };
  std::vector<Source> sources;
  for (const auto& r : spec.contemporaneous_columns)
    sources.push_back({data.column(r), 0, {r, ControlRole::Contemporaneous, 0}});
  for (int p = 1; p <= P; ++p) {
    for (const auto& v : lagged) {
      const ControlRole role = v == spec.target ? ControlRole::OwnLag : ControlRole::CrossLag;
      sources.push_back({data.column(v), p, {v + "_lag" + std::to_string(p), role, p}});
    }
  }
  if (spec.include_intercept) sources.push_back({-1, 0, {"intercept", ControlRole::Deterministic, 0}});
  if (spec.include_trend) sources.push_back({-2, 0, {"trend", ControlRole::Deterministic, 0}});

  std::vector<Index> shock_cols;
  std::vector<Index> instrument_cols;
  SULPSystem sys;
  for (const auto& s : spec.shocks) {
    ShockInfo info{s.name, !s.instruments.empty(), {}};
    if (info.latent) {
      for (const auto& m : s.instruments) {
        info.instruments.push_back(static_cast<Index>(instrument_cols.size()));
        instrument_cols.push_back(data.column(m));
        sys.instrument_names.push_back(m);
      }
      shock_cols.push_back(instrument_cols[info.instruments.front()]);
    } else {
      shock_cols.push_back(data.column(s.observed_column));
    }
    sys.shock_info.push_back(std::move(info));
  }

  auto control_value = [&](const Source& s, Index t) -> double {
    if (s.column == -1) return 1.0;
    if (s.column == -2) return static_cast<double>(t + 1) / static_cast<double>(n_raw);
    return data.values(t - s.lag, s.column);
  };

  const Index first = P + (spec.long_differences ? 1 : 0);
  std::vector<Index> origins;
  for (Index t = first; t < n_raw; ++t) {
    bool ok = true;
    for (const auto& s : sources) {
      if (s.column < 0) continue;
      ok = ok && !std::isnan(control_value(s, t));
      if (spec.long_differences) ok = ok && !std::isnan(control_value(s, t - 1));
    }
    for (Index c : shock_cols) ok = ok && !std::isnan(data.values(t, c));
    for (Index c : instrument_cols) ok = ok && !std::isnan(data.values(t, c));
    if (spec.long_differences) ok = ok && !std::isnan(data.values(t - 1, target));
    if (ok) origins.push_back(t);
  }
  const Index T = static_cast<Index>(origins.size());
  if (T < 2) throw DataError(DataError::Kind::InsufficientSample, "design: fewer than two usable origins");

  const Index k = static_cast<Index>(sources.size());
  sys.response.resize(T, H);
  sys.shocks.resize(T, static_cast<Index>(shock_cols.size()));
  sys.instruments.resize(T, static_cast<Index>(instrument_cols.size()));
  sys.controls.resize(T, k);
  sys.missing_by_row.assign(T, {});
  for (const auto& s : sources) sys.control_layout.push_back(s.info);

  for (Index i = 0; i < T; ++i) {
    const Index t = origins[i];
    sys.origin_labels.push_back(t < static_cast<Index>(data.time_index.size()) ? data.time_index[t]
                                                                               : std::to_string(t + 1));
    const double base = spec.long_differences ? data.values(t - 1, target) : 0.0;
    for (Index h = 0; h < H; ++h) {
      const Index lead = t + h;
      const double w = lead < n_raw ? data.values(lead, target) : kNaN;
      if (std::isnan(w)) {
        sys.response(i, h) = kNaN;
        sys.missing_by_row[i].push_back(h);
      } else {
        sys.response(i, h) = w - base;
      }
    }
    for (Index j = 0; j < k; ++j) {
      const auto& s = sources[j];
      double v = control_value(s, t);
      if (spec.long_differences && s.column >= 0) v -= control_value(s, t - 1);
      sys.controls(i, j) = v;
    }
    for (Index j = 0; j < static_cast<Index>(shock_cols.size()); ++j) sys.shocks(i, j) = data.values(t, shock_cols[j]);
    for (Index j = 0; j < static_cast<Index>(instrument_cols.size()); ++j)
      sys.instruments(i, j) = data.values(t, instrument_cols[j]);
  }

  // Latent shocks start at their standardized first instrument.
  for (Index j = 0; j < sys.n_shocks(); ++j) {
    if (!sys.shock_info[j].latent) continue;
    auto col = sys.shocks.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / std::max<double>(1.0, T - 1));
    col = (col.array() - mean) / (sd > 0.0 ? sd : 1.0);
  }

  sys.stochastic_volatility = spec.stochastic_volatility;
  sys.correlated_measurement_errors = spec.correlated_measurement_errors;
  return sys;
}

MatrixXd rescale_irf(const MatrixXd& draws, const ScalingInfo& scaling, const std::string& target, double shock_scale) {
  const double factor = scaling.at(target).std / shock_scale;
  return draws * factor;
}

}  // namespace sulp
