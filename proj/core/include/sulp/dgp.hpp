#pragma once

#include "sulp/rng.hpp"
#include "sulp/system.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sulp {

/// VARMA(P, J) process
///   w_t = sum_p Phi_p w_{t-p} + H e_t + alpha T^{-pi} sum_j A_j H e_{t-j},
/// e_t ~ N(0, I_n).
struct VARMAParams {
  Index n = 0;
  Index P = 0;
  Index J = 10;
  std::vector<MatrixXd> Phi;  // P matrices, n x n
  MatrixXd impact;            // H, n x n
  std::vector<MatrixXd> A;    // J matrices, n x n
  double alpha = 0.0;
  double pi = 0.5;
  std::vector<std::string> variables;
  Index target_index = 0;
  Index shock_index = 0;
  std::uint64_t ma_seed = 0;

  /// alpha T^{-pi}.
  double ma_scale(Index T) const;
  /// nP x nP companion matrix of the autoregressive part.
  MatrixXd companion() const;
  double spectral_radius() const;
  /// Throws DataError::Instability / Schema on violated invariants.
  void validate() const;
};

struct VARMASimulation {
  MatrixXd data;    // T x n
  MatrixXd shocks;  // T x n structural shocks aligned with data
};

/// Simulate T observations after `burn` discarded ones, starting from zero.
/// The MA weight uses T (not T + burn). Throws NumericalError::Divergence if
/// any value exceeds 1e8 in absolute value.
VARMASimulation simulate_varma(const VARMAParams& params, Index T, Rng& rng, Index burn = 1000);

/// Deterministic recursion from a zero state for a given shock matrix
/// (rows = periods) and MA scale.
MatrixXd varma_path(const VARMAParams& params, const MatrixXd& shocks, double ma_scale);

struct TrueIRF {
  VectorXd beta_star;  // H~ + 1 responses
  Index target = 0;
  Index shock = 0;
};

/// Exact responses of variable `target` to shock `shock` at h = 0..H~ via the
/// companion form, including the MA terms for sample size T.
TrueIRF true_irf(const VARMAParams& params, Index T, Index target, Index shock, Index max_horizon);

struct AR1Path {
  VectorXd w;
  VectorXd eps;
};

/// w_t = rho w_{t-1} + e_t with a 200-step burn-in.
AR1Path simulate_ar1(double rho, Index T, Rng& rng, Index burn = 200);

/// Read a calibration file. A matrices are drawn from N(0, 1) entries with
/// the stored seed unless the file lists them explicitly. `alpha_override`
/// replaces the file's alpha when non-negative.
VARMAParams load_calibration(const std::filesystem::path& path, double alpha_override = -1.0);

/// Named presets "alpha0" and "alpha2".
double alpha_preset(const std::string& name);

}  // namespace sulp
