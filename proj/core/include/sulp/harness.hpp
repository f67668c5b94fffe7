#pragma once

#include "sulp/dgp.hpp"
#include "sulp/priors.hpp"
#include "sulp/sampler.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sulp {

/// Estimators known to the harness: "sulp" (GP + NG prior), "sulp_flat"
/// (beta ~ N(0, 10 I)), "lp_default" (OLS + Newey-West) and "lp_smooth".
const std::vector<std::string>& known_estimators();

struct MCConfig {
  Index n_reps = 200;
  std::vector<Index> T_grid = {250};
  std::vector<double> alpha_grid = {2.0};
  Index max_horizon = 16;
  std::vector<std::string> estimators = {"sulp", "sulp_flat", "lp_default", "lp_smooth"};
  double level = 0.90;
  std::vector<double> c_grid;  // coarsening values for the Bayesian estimators
  std::uint64_t seed = 1;
  int threads = 1;
  int control_lags = 4;
  Index burn = 1000;
  SamplerConfig sampler;
  VARMAParams dgp;
  std::filesystem::path checkpoint_dir;  // required
  /// Progress callback (cell label, finished reps, total reps); may be empty.
  std::function<void(const std::string&, Index, Index)> progress;

  void validate() const;
  /// Fingerprint of everything that determines replication results.
  nlohmann::json fingerprint() const;
};

/// Interval and point estimate of one estimator in one replication.
struct RepEstimate {
  bool ok = false;
  std::string error;
  VectorXd point;
  VectorXd lower;
  VectorXd upper;
  /// Bayesian estimators only: the same quantities under the power posterior
  /// for each c in MCConfig::c_grid, plus its effective sample size.
  std::vector<VectorXd> c_point;
  std::vector<VectorXd> c_lower;
  std::vector<VectorXd> c_upper;
  std::vector<double> c_ess;
};

/// Normalized metrics per horizon.
struct BiasStd {
  VectorXd bias;        // |mean - beta*| / norm
  VectorXd std;         // sample std (R - 1) / norm
  VectorXd median_abs;  // median |estimate - beta*| / norm
  VectorXd q25_abs;
  VectorXd q75_abs;
};

/// (beta*' beta* / H~)^{1/2}. Throws NumericalError::NormalizerZero.
double irf_normalizer(const VectorXd& beta_star);

/// Fraction of rows with lower <= beta* <= upper, per horizon.
VectorXd coverage(const MatrixXd& lower, const MatrixXd& upper, const VectorXd& beta_star);

/// estimates: R x H. Needs R >= 2.
BiasStd normalized_bias_std(const MatrixXd& estimates, const VectorXd& beta_star);

struct MCCell {
  std::string estimator;
  Index T = 0;
  double alpha = 0.0;
  double c = 1.0;  // 1 for the standard posterior and classical estimators
  Index n_ok = 0;
  Index n_failed = 0;
  VectorXd beta_star;
  VectorXd coverage;
  VectorXd width;  // mean interval width
  BiasStd metrics;
  double mean_ess = 0.0;  // coarsened cells only
};

struct MCResult {
  std::vector<MCCell> cells;         // c = 1 cells for all estimators
  std::vector<MCCell> coarsening;    // one cell per Bayesian estimator and c
  const MCCell* find(const std::string& estimator, Index T, double alpha) const;
  const MCCell* find_coarsened(const std::string& estimator, Index T, double alpha, double c) const;
  /// Largest failure share over all cells.
  double worst_failure_rate() const;
};

/// Run (or resume) every replication, writing one checkpoint file per
/// replication, then aggregate from the checkpoint files.
MCResult run_monte_carlo(const MCConfig& config);

/// Aggregate existing checkpoint files without running anything.
MCResult aggregate_monte_carlo(const MCConfig& config);

/// Run all estimators on one simulated replication.
std::map<std::string, RepEstimate> run_replication(const MCConfig& config, Index T, double alpha, Index rep);

/// Tidy CSV: estimator,T,alpha,c,h,metric,value.
void write_mc_csv(const MCResult& result, const std::filesystem::path& path);

}  // namespace sulp
