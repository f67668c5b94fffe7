#include "sulp/summary.hpp"

#include "sulp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace sulp {

VectorXd weighted_quantiles(const VectorXd& values, const VectorXd& weights, const std::vector<double>& probs) {
  const Index n = values.size();
  if (n == 0 || weights.size() != n)
    throw NumericalError(NumericalError::Kind::Degenerate, "weighted quantile needs matching non-empty inputs");
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] < values[b]; });

  const double total = weights.sum();
  std::vector<double> pos(n);
  std::vector<double> sorted(n);
  double cum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = weights[order[i]] / total;
    pos[i] = cum + 0.5 * w;
    cum += w;
    sorted[i] = values[order[i]];
  }

  VectorXd out(static_cast<Index>(probs.size()));
  for (std::size_t q = 0; q < probs.size(); ++q) {
    const double p = probs[q];
    if (p <= pos.front()) {
      out[q] = sorted.front();
      continue;
    }
    if (p >= pos.back()) {
      out[q] = sorted.back();
      continue;
    }
    const auto it = std::upper_bound(pos.begin(), pos.end(), p);
    const Index hi = static_cast<Index>(it - pos.begin());
    const Index lo = hi - 1;
    const double span = pos[hi] - pos[lo];
    const double frac = span > 0.0 ? (p - pos[lo]) / span : 0.0;
    out[q] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
  return out;
}

double weighted_quantile(const VectorXd& values, const VectorXd& weights, double p) {
  return weighted_quantiles(values, weights, {p})[0];
}

const MatrixXd& IRFSummary::at_level(double level) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (std::abs(levels[i] - level) < 1e-12) return quantiles[i];
  throw DataError(DataError::Kind::InvalidSpec, "quantile level not summarized");
}

IRFSummary summarize_draws(const MatrixXd& draws, Index n_shocks, Index horizons, const VectorXd& weights,
                           const std::vector<std::string>& shock_names, const VectorXd& scale,
                           const std::vector<double>& levels) {
  const Index S = draws.rows();
  IRFSummary out;
  out.shocks = shock_names;
  out.levels = levels;
  out.mean.resize(n_shocks, horizons);
  out.sd.resize(n_shocks, horizons);
  out.quantiles.assign(levels.size(), MatrixXd(n_shocks, horizons));
  const double total = weights.sum();
  for (Index i = 0; i < n_shocks; ++i) {
    const double factor = scale.size() > 0 ? scale[i] : 1.0;
    for (Index h = 0; h < horizons; ++h) {
      const VectorXd col = draws.col(i * horizons + h) * factor;
      const double mean = col.dot(weights) / total;
      double var = 0.0;
      for (Index s = 0; s < S; ++s) var += weights[s] * (col[s] - mean) * (col[s] - mean);
      out.mean(i, h) = mean;
      out.sd(i, h) = std::sqrt(var / total);
      const VectorXd q = weighted_quantiles(col, weights, levels);
      for (std::size_t l = 0; l < levels.size(); ++l) out.quantiles[l](i, h) = q[static_cast<Index>(l)];
    }
  }
  return out;
}

void write_irf_csv(const IRFSummary& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + path.string() + "'");
  out << "shock,h,mean";
  for (double l : summary.levels) out << ",q" << std::setw(2) << std::setfill('0') << static_cast<int>(std::lround(l * 100));
  out << std::setfill(' ') << '\n' << std::setprecision(17);
  for (Index i = 0; i < summary.n_shocks(); ++i) {
    for (Index h = 0; h < summary.horizons(); ++h) {
      out << summary.shocks[i] << ',' << h << ',' << summary.mean(i, h);
      for (const auto& q : summary.quantiles) out << ',' << q(i, h);
      out << '\n';
    }
  }
}

}  // namespace sulp
