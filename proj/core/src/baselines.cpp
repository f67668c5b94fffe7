#include "sulp/baselines.hpp"

#include "sulp/errors.hpp"
#include "sulp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sulp {
namespace {

std::vector<Index> complete_rows(const SULPSystem& system, Index h) {
  std::vector<Index> rows;
  for (Index t = 0; t < system.rows(); ++t)
    if (!std::isnan(system.response(t, h))) rows.push_back(t);
  return rows;
}

// Residual of `v` after projecting on the columns of `z` (rows already selected).
MatrixXd partial_out(const MatrixXd& z, const MatrixXd& v) {
  if (z.cols() == 0) return v;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(z);
  return v - z * qr.solve(v);
}

}  // namespace

std::pair<VectorXd, VectorXd> ClassicalLPResult::ci(double level) const {
  const double z = normal_quantile(0.5 + 0.5 * level);
  return {beta_hat - z * se, beta_hat + z * se};
}

MatrixXd newey_west(const MatrixXd& scores, int lag) {
  const Index T = scores.rows();
  MatrixXd s = scores.transpose() * scores;
  for (int l = 1; l <= lag && l < T; ++l) {
    const double w = 1.0 - static_cast<double>(l) / (static_cast<double>(lag) + 1.0);
    const MatrixXd g = scores.bottomRows(T - l).transpose() * scores.topRows(T - l);
    s += w * (g + g.transpose());
  }
  return s;
}

ClassicalLPResult ols_lp_hac(const SULPSystem& system, Index shock, std::optional<int> bandwidth) {
  const Index H = system.horizons();
  const Index k = system.n_controls();
  ClassicalLPResult out;
  out.beta_hat.resize(H);
  out.se.resize(H);
  for (Index h = 0; h < H; ++h) {
    const auto rows = complete_rows(system, h);
    const Index n = static_cast<Index>(rows.size());
    if (n <= k + 2)
      throw NumericalError(NumericalError::Kind::Singular, "LP: too few complete rows at horizon " + std::to_string(h));
    MatrixXd w(n, k + 1);
    VectorXd y(n);
    for (Index r = 0; r < n; ++r) {
      w(r, 0) = system.shocks(rows[r], shock);
      if (k > 0) w.row(r).tail(k) = system.controls.row(rows[r]);
      y[r] = system.response(rows[r], h);
    }
    const MatrixXd wtw = w.transpose() * w;
    Eigen::FullPivLU<MatrixXd> lu(wtw);
    if (lu.rank() < wtw.rows())
      throw NumericalError(NumericalError::Kind::Singular, "LP: rank-deficient design at horizon " + std::to_string(h));
    const MatrixXd wtw_inv = lu.inverse();
    const VectorXd coef = wtw_inv * (w.transpose() * y);
    const VectorXd u = y - w * coef;
    const int lag = bandwidth ? *bandwidth : static_cast<int>(h);
    const MatrixXd scores = w.array().colwise() * u.array();
    const MatrixXd v = wtw_inv * newey_west(scores, lag) * wtw_inv;
    out.beta_hat[h] = coef[0];
    out.se[h] = std::sqrt(std::max(v(0, 0), 0.0));
    out.bandwidth.push_back(lag);
  }
  return out;
}

MatrixXd difference_matrix(Index horizons, int order) {
  MatrixXd d = MatrixXd::Identity(horizons, horizons);
  for (int r = 0; r < order; ++r) {
    const Index m = d.rows();
    if (m < 2) return MatrixXd::Zero(0, horizons);
    d = (d.bottomRows(m - 1) - d.topRows(m - 1)).eval();
  }
  return d;
}

ClassicalLPResult smooth_lp(const SULPSystem& system, const SmoothLPOptions& options, Index shock) {
  const Index T = system.rows();
  const Index H = system.horizons();
  const Index k = system.n_controls();

  // Partialled-out shock and response per horizon; NaN marks unused rows.
  MatrixXd xt = MatrixXd::Constant(T, H, std::numeric_limits<double>::quiet_NaN());
  MatrixXd yt = xt;
  for (Index h = 0; h < H; ++h) {
    const auto rows = complete_rows(system, h);
    const Index n = static_cast<Index>(rows.size());
    if (n <= k + 2)
      throw NumericalError(NumericalError::Kind::Singular, "smooth LP: too few rows at horizon " + std::to_string(h));
    MatrixXd z(n, k);
    MatrixXd xy(n, 2);
    for (Index r = 0; r < n; ++r) {
      if (k > 0) z.row(r) = system.controls.row(rows[r]);
      xy(r, 0) = system.shocks(rows[r], shock);
      xy(r, 1) = system.response(rows[r], h);
    }
    const MatrixXd res = partial_out(z, xy);
    for (Index r = 0; r < n; ++r) {
      xt(rows[r], h) = res(r, 0);
      yt(rows[r], h) = res(r, 1);
    }
  }

  const MatrixXd d = difference_matrix(H, options.order);
  const MatrixXd dtd = d.transpose() * d;

  auto moments = [&](const std::vector<bool>& use, VectorXd& g_diag, VectorXd& g_rhs) {
    g_diag = VectorXd::Zero(H);
    g_rhs = VectorXd::Zero(H);
    for (Index t = 0; t < T; ++t) {
      if (!use[t]) continue;
      for (Index h = 0; h < H; ++h) {
        if (std::isnan(xt(t, h))) continue;
        g_diag[h] += xt(t, h) * xt(t, h);
        g_rhs[h] += xt(t, h) * yt(t, h);
      }
    }
  };
  auto solve = [&](const VectorXd& g_diag, const VectorXd& g_rhs, double lambda) {
    MatrixXd a = lambda * dtd;
    a.diagonal() += g_diag;
    Eigen::LDLT<MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
      throw NumericalError(NumericalError::Kind::Singular, "smooth LP: singular penalized system");
    return VectorXd(ldlt.solve(g_rhs));
  };

  VectorXd g_diag;
  VectorXd g_rhs;
  moments(std::vector<bool>(T, true), g_diag, g_rhs);

  ClassicalLPResult out;
  if (options.lambda) {
    out.lambda = *options.lambda;
  } else {
    std::vector<double> grid = options.lambda_grid;
    if (grid.empty()) {
      const double base = g_diag.mean();
      grid.push_back(0.0);
      for (double e = -4.0; e <= 4.0 + 1e-9; e += 0.5) grid.push_back(base * std::pow(10.0, e));
    }
    const int folds = std::max(2, options.folds);
    std::vector<double> loss(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
      const Index lo = T * f / folds;
      const Index hi = T * (f + 1) / folds;
      std::vector<bool> train(T, true);
      for (Index t = lo; t < hi; ++t) train[t] = false;
      VectorXd fd;
      VectorXd fr;
      moments(train, fd, fr);
      for (std::size_t c = 0; c < grid.size(); ++c) {
        VectorXd b;
        try {
          b = solve(fd, fr, grid[c]);
        } catch (const NumericalError&) {
          loss[c] = std::numeric_limits<double>::infinity();
          continue;
        }
        for (Index t = lo; t < hi; ++t)
          for (Index h = 0; h < H; ++h)
            if (!std::isnan(xt(t, h))) {
              const double e = yt(t, h) - xt(t, h) * b[h];
              loss[c] += e * e;
            }
      }
    }
    const auto best = std::min_element(loss.begin(), loss.end());
    out.lambda = grid[static_cast<std::size_t>(best - loss.begin())];
    out.cv_grid = grid;
    out.cv_loss = loss;
  }

  out.beta_hat = solve(g_diag, g_rhs, out.lambda);

  MatrixXd scores = MatrixXd::Zero(T, H);
  for (Index t = 0; t < T; ++t)
    for (Index h = 0; h < H; ++h)
      if (!std::isnan(xt(t, h))) scores(t, h) = xt(t, h) * (yt(t, h) - xt(t, h) * out.beta_hat[h]);
  MatrixXd a = out.lambda * dtd;
  a.diagonal() += g_diag;
  const MatrixXd a_inv = a.inverse();
  const int lag = static_cast<int>(H - 1);
  const MatrixXd v = a_inv * newey_west(scores, lag) * a_inv;
  out.se = v.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.bandwidth.assign(static_cast<std::size_t>(H), lag);
  return out;
}

}  // namespace sulp
