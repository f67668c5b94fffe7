#include "sulp/dgp.hpp"

#include "sulp/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace sulp {
namespace {

constexpr double kDivergence = 1e8;

MatrixXd matrix_from_json(const nlohmann::json& j, Index rows, Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw DataError(DataError::Kind::Schema, "calibration: '" + what + "' must have " + std::to_string(rows) + " rows");
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw DataError(DataError::Kind::Schema,
                      "calibration: '" + what + "' row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

}  // namespace

double VARMAParams::ma_scale(Index T) const {
  return alpha == 0.0 ? 0.0 : alpha * std::pow(static_cast<double>(T), -pi);
}

MatrixXd VARMAParams::companion() const {
  MatrixXd f = MatrixXd::Zero(n * P, n * P);
  for (Index p = 0; p < P; ++p) f.block(0, p * n, n, n) = Phi[p];
  if (P > 1) f.block(n, 0, n * (P - 1), n * (P - 1)).setIdentity();
  return f;
}

double VARMAParams::spectral_radius() const {
  Eigen::EigenSolver<MatrixXd> es(companion(), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void VARMAParams::validate() const {
  if (n < 1 || P < 1) throw DataError(DataError::Kind::Schema, "VARMA: n and P must be positive");
  if (static_cast<Index>(Phi.size()) != P) throw DataError(DataError::Kind::Schema, "VARMA: need P Phi matrices");
  for (const auto& m : Phi)
    if (m.rows() != n || m.cols() != n) throw DataError(DataError::Kind::Schema, "VARMA: Phi must be n x n");
  if (impact.rows() != n || impact.cols() != n) throw DataError(DataError::Kind::Schema, "VARMA: H must be n x n");
  if (static_cast<Index>(A.size()) != J) throw DataError(DataError::Kind::Schema, "VARMA: need J MA matrices");
  if (target_index < 0 || target_index >= n || shock_index < 0 || shock_index >= n)
    throw DataError(DataError::Kind::Schema, "VARMA: target/shock index out of range");
  if (alpha < 0.0) throw DataError(DataError::Kind::Schema, "VARMA: alpha must be non-negative");
  const double radius = spectral_radius();
  if (!(radius < 1.0))
    throw DataError(DataError::Kind::Instability,
                    "VARMA: companion spectral radius " + std::to_string(radius) + " is not below 1");
  if (std::abs(impact.determinant()) < 1e-12) throw DataError(DataError::Kind::Schema, "VARMA: H is singular");
}

MatrixXd varma_path(const VARMAParams& params, const MatrixXd& shocks, double ma_scale) {
  const Index N = shocks.rows();
  const Index n = params.n;
  const MatrixXd he = shocks * params.impact.transpose();  // row t = (H e_t)'
  MatrixXd w = MatrixXd::Zero(N, n);
  VectorXd next(n);
  for (Index t = 0; t < N; ++t) {
    next = he.row(t).transpose();
    for (Index p = 1; p <= params.P && p <= t; ++p) next.noalias() += params.Phi[p - 1] * w.row(t - p).transpose();
    if (ma_scale != 0.0) {
      for (Index j = 1; j <= params.J && j <= t; ++j)
        next.noalias() += ma_scale * (params.A[j - 1] * he.row(t - j).transpose());
    }
    if (next.cwiseAbs().maxCoeff() > kDivergence)
      throw NumericalError(NumericalError::Kind::Divergence,
                           "VARMA simulation diverged at period " + std::to_string(t));
    w.row(t) = next.transpose();
  }
  return w;
}

VARMASimulation simulate_varma(const VARMAParams& params, Index T, Rng& rng, Index burn) {
  const MatrixXd eps = rng.normal_matrix(T + burn, params.n);
  const MatrixXd w = varma_path(params, eps, params.ma_scale(T));
  return {w.bottomRows(T), eps.bottomRows(T)};
}

TrueIRF true_irf(const VARMAParams& params, Index T, Index target, Index shock, Index max_horizon) {
  const Index n = params.n;
  const MatrixXd f = params.companion();
  const double scale = params.ma_scale(T);

  // powers[h] = M' F^h M, the n x n upper-left block of F^h.
  std::vector<MatrixXd> powers;
  MatrixXd fh = MatrixXd::Identity(f.rows(), f.cols());
  for (Index h = 0; h <= max_horizon; ++h) {
    powers.push_back(fh.topLeftCorner(n, n));
    fh = f * fh;
  }
  TrueIRF out;
  out.target = target;
  out.shock = shock;
  out.beta_star.resize(max_horizon + 1);
  for (Index h = 0; h <= max_horizon; ++h) {
    MatrixXd resp = powers[h] * params.impact;
    for (Index k = 1; k <= h && k <= params.J && scale != 0.0; ++k)
      resp.noalias() += scale * (powers[h - k] * params.A[k - 1] * params.impact);
    out.beta_star[h] = resp(target, shock);
  }
  return out;
}

AR1Path simulate_ar1(double rho, Index T, Rng& rng, Index burn) {
  if (std::abs(rho) > 1.0) throw DataError(DataError::Kind::InvalidSpec, "AR(1): |rho| must not exceed 1");
  const VectorXd eps = rng.normal_vector(T + burn);
  VectorXd w(T + burn);
  double prev = 0.0;
  for (Index t = 0; t < T + burn; ++t) {
    prev = rho * prev + eps[t];
    w[t] = prev;
  }
  return {w.tail(T), eps.tail(T)};
}

VARMAParams load_calibration(const std::filesystem::path& path, double alpha_override) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::MissingFile, "cannot open calibration '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::Schema, "calibration is not valid JSON: " + std::string(e.what()));
  }
  VARMAParams p;
  try {
    if (j.at("schema_version").get<int>() != 1)
      throw DataError(DataError::Kind::Schema, "calibration: unsupported schema_version");
    p.n = j.at("n").get<Index>();
    p.P = j.at("P").get<Index>();
    p.J = j.value("J", Index{10});
    p.pi = j.value("pi", 0.5);
    p.alpha = alpha_override >= 0.0 ? alpha_override : j.value("alpha", 0.0);
    p.ma_seed = j.at("ma_seed").get<std::uint64_t>();
    p.target_index = j.at("target_index").get<Index>();
    p.shock_index = j.at("shock_index").get<Index>();
    if (j.contains("variables")) p.variables = j.at("variables").get<std::vector<std::string>>();
    const auto& phi = j.at("Phi");
    if (!phi.is_array() || static_cast<Index>(phi.size()) != p.P)
      throw DataError(DataError::Kind::Schema, "calibration: 'Phi' must list P matrices");
    for (Index l = 0; l < p.P; ++l) p.Phi.push_back(matrix_from_json(phi[l], p.n, p.n, "Phi"));
    p.impact = matrix_from_json(j.at("H"), p.n, p.n, "H");
    if (j.contains("A")) {
      for (const auto& a : j.at("A")) p.A.push_back(matrix_from_json(a, p.n, p.n, "A"));
    } else {
      Rng rng(p.ma_seed);
      for (Index k = 0; k < p.J; ++k) p.A.push_back(rng.normal_matrix(p.n, p.n));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Kind::Schema, "calibration schema error: " + std::string(e.what()));
  }
  if (!p.variables.empty() && static_cast<Index>(p.variables.size()) != p.n)
    throw DataError(DataError::Kind::Schema, "calibration: 'variables' must have n entries");
  p.validate();
  return p;
}

double alpha_preset(const std::string& name) {
  if (name == "alpha0") return 0.0;
  if (name == "alpha2") return 2.0;
  throw DataError(DataError::Kind::InvalidSpec, "unknown alpha preset '" + name + "'");
}

}  // namespace sulp
