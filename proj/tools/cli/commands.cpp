#include "cli/commands.hpp"

#include <sulp/baselines.hpp>
#include <sulp/chain_io.hpp>
#include <sulp/dataset.hpp>
#include <sulp/dgp.hpp>
#include <sulp/harness.hpp>
#include <sulp/model.hpp>
#include <sulp/power_posterior.hpp>
#include <sulp/summary.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sulp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kManifestVersion = 1;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string c_label(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", c);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + path.string() + "'");
  return out;
}

fs::path prepare_output(const RunConfig& cfg) {
  fs::create_directories(cfg.output.directory);
  return cfg.output.directory;
}

// Manifest with the config hash and a checksum of every written file. No
// absolute paths and no timestamps, so reruns are byte-identical.
void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& files, json extra = json::object()) {
  json m = std::move(extra);
  m["manifest_version"] = kManifestVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["config_sha256"] = sha256_hex(cfg.text);
  json listed = json::array();
  for (const auto& f : files) listed.push_back({{"name", f}, {"sha256", sha256_hex(read_file(dir / f))}});
  m["files"] = listed;
  auto out = open_out(dir / "manifest.json");
  out << std::setw(2) << m << '\n';
}

// Quantile table for a path (shock or instrument by origin). `draws` is
// S x (n * T), column t + T * i.
void write_path_csv(const fs::path& path, const std::string& key, const std::vector<std::string>& names,
                    const std::vector<std::string>& labels, const MatrixXd& draws) {
  const Index T = static_cast<Index>(labels.size());
  const VectorXd w = VectorXd::Constant(draws.rows(), 1.0 / static_cast<double>(draws.rows()));
  auto out = open_out(path);
  out << key << ",origin,mean";
  for (double p : kSummaryLevels) out << ",q" << std::setw(2) << std::setfill('0') << static_cast<int>(p * 100 + 0.5);
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (Index t = 0; t < T; ++t) {
      const VectorXd col = draws.col(t + T * static_cast<Index>(i));
      const VectorXd q = weighted_quantiles(col, w, kSummaryLevels);
      out << names[i] << ',' << labels[t] << ',' << fmt(col.mean());
      for (Index j = 0; j < q.size(); ++j) out << ',' << fmt(q[j]);
      out << '\n';
    }
  }
}

TimeSeriesDataset select_columns(const TimeSeriesDataset& data, const std::vector<std::string>& columns) {
  TimeSeriesDataset out;
  out.time_index = data.time_index;
  out.values.resize(data.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.values.col(static_cast<Index>(j)) = data.values.col(data.column(columns[j]));
  out.names = columns;
  return out;
}

std::vector<std::string> used_columns(const DesignSpec& spec) {
  std::vector<std::string> cols;
  auto add = [&](const std::string& c) {
    if (!c.empty() && std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  };
  add(spec.target);
  for (const auto& s : spec.shocks) {
    add(s.observed_column);
    for (const auto& m : s.instruments) add(m);
  }
  for (const auto& c : spec.contemporaneous_columns) add(c);
  for (const auto& c : spec.lagged_columns) add(c);
  return cols;
}

HyperParams resolve_priors(const RunConfig& cfg, Index horizons) {
  HyperParams hp = cfg.priors;
  hp.ng.lambda2 = VectorXd::Ones(horizons);
  hp.cov = default_cov_prior(horizons, cfg.priors.cov.scale);
  return hp;
}

std::vector<std::string> shock_names(const DesignSpec& spec) {
  std::vector<std::string> names;
  for (const auto& s : spec.shocks) names.push_back(s.name);
  return names;
}

}  // namespace

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.output_dir) config.output.directory = *o.output_dir;
  if (o.threads) {
    if (*o.threads < 1) throw ConfigError("--threads must be at least 1");
    config.threads = *o.threads;
  }
  if (o.chain) config.reweight.chain = *o.chain;
  if (!o.c_grid.empty()) config.reweight.c_grid = o.c_grid;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.data.path.empty()) throw ConfigError("estimate needs data.path");
  if (cfg.spec.design.target.empty()) throw ConfigError("estimate needs a spec section");
  const TimeSeriesDataset raw = load_csv(cfg.data.path, cfg.data.time_column);

  DesignSpec spec = cfg.spec.design;
  auto [data, scaling] = standardize(select_columns(raw, used_columns(spec)));
  if (cfg.spec.principal_component) {
    for (auto& shock : spec.shocks) {
      if (shock.instruments.size() < 2) continue;
      const std::string name = shock.name + "_pc";
      data.add_column(name, first_principal_component(data, shock.instruments));
      shock.instruments = {name};
    }
  }
  spec.validate();
  const SULPSystem system = build_design(data, spec);
  const Index H = system.horizons();
  const Index n_x = system.n_shocks();

  const HyperParams hp = resolve_priors(cfg, H);
  const ControlsPrior controls =
      minnesota_controls_prior(system.control_layout, H, cfg.minnesota_levels || spec.target_in_levels, hp.minnesota);
  SamplerConfig sc = cfg.sampler;
  sc.seed = cfg.seed;
  sc.store_latent = system.has_latent_shocks() || system.stochastic_volatility;
  log << "estimate: T=" << system.rows() << " H=" << H << " shocks=" << n_x << " controls=" << system.n_controls()
      << " missing=" << system.missing_count() << '\n';
  const Chain chain = run_sampler(system, hp, controls, sc);

  const double target_sd = scaling.at(spec.target).std;
  VectorXd scale(n_x);
  for (Index i = 0; i < n_x; ++i) {
    const auto& s = spec.shocks[static_cast<std::size_t>(i)];
    scale[i] = s.observed_column.empty() ? target_sd : target_sd / scaling.at(s.observed_column).std;
  }
  const auto names = shock_names(spec);
  const Index S = chain.draws();
  const VectorXd uniform = VectorXd::Constant(S, 1.0 / static_cast<double>(S));

  const fs::path dir = prepare_output(cfg);
  std::vector<std::string> files;
  write_irf_csv(summarize_draws(chain.beta, n_x, H, uniform, names, scale), dir / "irf.csv");
  files.push_back("irf.csv");
  if (hp.irf_prior == IrfPrior::GaussianProcess) {
    write_irf_csv(summarize_draws(chain.mu_beta, n_x, H, uniform, names, scale), dir / "gp_mean.csv");
    files.push_back("gp_mean.csv");
  }
  if (system.has_latent_shocks() && chain.x.size() > 0) {
    write_path_csv(dir / "shocks.csv", "shock", names, system.origin_labels, chain.x);
    files.push_back("shocks.csv");

    const Index T = system.rows();
    const Index n_M = system.n_instruments();
    MatrixXd rel(S, T * n_M);
    for (Index s = 0; s < S; ++s)
      for (Index m = 0; m < n_M; ++m) {
        const Index owner = system.instrument_owner(m);
        for (Index t = 0; t < T; ++t) {
          const double var = chain.logvol.size() > 0 && system.stochastic_volatility
                                 ? std::exp(chain.logvol(s, t + T * owner))
                                 : 1.0;
          rel(s, t + T * m) = relevance_statistic(chain.phi(s, m), var, chain.sigma2_nu(s, m));
        }
      }
    write_path_csv(dir / "relevance.csv", "instrument", system.instrument_names, system.origin_labels, rel);
    files.push_back("relevance.csv");
  }
  const std::string config_hash = sha256_hex(cfg.text);
  if (cfg.output.chain) {
    json extra = {{"shock_names", names},
                  {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())},
                  {"target", spec.target},
                  {"config_sha256", config_hash}};
    write_chain(chain, dir / "chain.bin", dir / "chain.json", extra);
    files.push_back("chain.bin");
    files.push_back("chain.json");
  }
  if (cfg.output.beta_csv) {
    write_beta_csv(chain, dir / "beta_draws.csv");
    files.push_back("beta_draws.csv");
  }

  json acc_xi = json::array(), acc_vs = json::array();
  for (Index i = 0; i < chain.acceptance_xi.size(); ++i) {
    acc_xi.push_back(chain.acceptance_xi[i]);
    acc_vs.push_back(chain.acceptance_varsigma[i]);
  }
  json extra = {{"rows", system.rows()},
                {"horizons", H},
                {"stored_draws", S},
                {"shock_names", names},
                {"acceptance_xi", acc_xi},
                {"acceptance_varsigma", acc_vs},
                {"priors", to_json(hp)}};
  write_manifest(dir, "estimate", cfg, files, extra);
  log << "estimate: wrote " << files.size() << " files to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto& sim = cfg.simulate;
  const fs::path dir = prepare_output(cfg);
  Rng rng(cfg.seed, {0x517});
  json extra;
  VectorXd truth;
  TimeSeriesDataset data;
  for (Index t = 0; t < sim.T; ++t) data.time_index.push_back(std::to_string(t + 1));

  if (sim.dgp == "ar1") {
    if (!(std::abs(sim.rho) < 1.0)) throw ConfigError("simulate.rho must lie in (-1, 1)");
    const AR1Path path = simulate_ar1(sim.rho, sim.T, rng, sim.burn);
    data.names = {"w", "eps"};
    data.values.resize(sim.T, 2);
    data.values.col(0) = path.w;
    data.values.col(1) = path.eps;
    truth.resize(sim.max_horizon + 1);
    for (Index h = 0; h <= sim.max_horizon; ++h) truth[h] = std::pow(sim.rho, static_cast<double>(h));
    extra = {{"dgp", "ar1"}, {"rho", sim.rho}, {"target", "w"}, {"shock", "eps"}};
  } else {
    if (sim.calibration.empty()) throw ConfigError("simulate.calibration is required for the varma dgp");
    const VARMAParams params = load_calibration(sim.calibration, sim.alpha.value_or(-1.0));
    const VARMASimulation out = simulate_varma(params, sim.T, rng, sim.burn);
    data.names = params.variables;
    data.names.push_back("shock");
    data.values.resize(sim.T, params.n + 1);
    data.values.leftCols(params.n) = out.data;
    data.values.col(params.n) = out.shocks.col(params.shock_index);
    truth = true_irf(params, sim.T, params.target_index, params.shock_index, sim.max_horizon).beta_star;
    extra = {{"dgp", "varma"},
             {"alpha", params.alpha},
             {"pi", params.pi},
             {"target", params.variables[static_cast<std::size_t>(params.target_index)]},
             {"shock", params.variables[static_cast<std::size_t>(params.shock_index)]},
             {"spectral_radius", params.spectral_radius()}};
  }
  write_csv(data, dir / "data.csv");
  {
    auto out = open_out(dir / "truth.csv");
    out << "h,beta_star\n";
    for (Index h = 0; h < truth.size(); ++h) out << h << ',' << fmt(truth[h]) << '\n';
  }
  extra["T"] = sim.T;
  extra["burn"] = sim.burn;
  extra["max_horizon"] = sim.max_horizon;
  write_manifest(dir, "simulate", cfg, {"data.csv", "truth.csv"}, extra);
  log << "simulate: " << sim.dgp << " T=" << sim.T << " written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_montecarlo(const RunConfig& cfg, std::ostream& log) {
  const auto& m = cfg.montecarlo;
  if (m.calibration.empty()) throw ConfigError("montecarlo.calibration is required");
  const fs::path dir = prepare_output(cfg);

  MCConfig mc;
  mc.n_reps = m.n_reps;
  mc.T_grid = m.T_grid;
  mc.alpha_grid = m.alpha_grid;
  mc.max_horizon = m.max_horizon;
  mc.estimators = m.estimators;
  mc.level = m.level;
  mc.c_grid = m.c_grid;
  mc.seed = cfg.seed;
  mc.threads = cfg.threads;
  mc.control_lags = m.control_lags;
  mc.burn = m.burn;
  mc.sampler = cfg.sampler;
  mc.dgp = load_calibration(m.calibration);
  mc.checkpoint_dir = m.checkpoint_dir.empty() ? dir / "checkpoints" : m.checkpoint_dir;
  mc.progress = [&log](const std::string& cell, Index done, Index total) {
    log << "montecarlo: " << cell << ' ' << done << '/' << total << '\n';
  };
  try {
    mc.validate();
  } catch (const DataError& e) {
    throw ConfigError(std::string("montecarlo: ") + e.what());
  }

  const MCResult result = run_monte_carlo(mc);
  write_mc_csv(result, dir / "results.csv");

  json cells = json::array();
  for (const auto& c : result.cells)
    cells.push_back({{"estimator", c.estimator}, {"T", c.T}, {"alpha", c.alpha}, {"n_ok", c.n_ok},
                     {"n_failed", c.n_failed}});
  const double worst = result.worst_failure_rate();
  json extra = {{"fingerprint", mc.fingerprint()}, {"cells", cells}, {"worst_failure_rate", worst}};
  write_manifest(dir, "montecarlo", cfg, {"results.csv"}, extra);
  if (worst > 0.10) {
    log << "montecarlo: failure share " << worst << " exceeds 10% in at least one cell\n";
    return kExitPartialFailure;
  }
  return kExitOk;
}

int cmd_reweight(const RunConfig& cfg, std::ostream& log) {
  const auto& rw = cfg.reweight;
  if (rw.chain.empty()) throw ConfigError("reweight needs a chain manifest (reweight.chain or --chain)");
  if (!fs::exists(rw.chain)) throw DataError(DataError::Kind::MissingFile, "chain '" + rw.chain.string() + "' not found");
  const Chain chain = read_chain(rw.chain);
  json meta;
  {
    std::ifstream in(rw.chain);
    in >> meta;
  }
  const Index n_x = chain.n_shocks;
  const Index H = chain.horizons;
  std::vector<std::string> names;
  VectorXd scale = VectorXd::Ones(n_x);
  if (meta.contains("shock_names")) names = meta["shock_names"].get<std::vector<std::string>>();
  if (meta.contains("scale")) {
    const auto v = meta["scale"].get<std::vector<double>>();
    if (static_cast<Index>(v.size()) == n_x) scale = Eigen::Map<const VectorXd>(v.data(), n_x);
  }
  if (static_cast<Index>(names.size()) != n_x) {
    names.clear();
    for (Index i = 0; i < n_x; ++i) names.push_back("shock" + std::to_string(i + 1));
  }

  const std::vector<double> grid = rw.c_grid.empty() ? default_c_grid() : rw.c_grid;
  const fs::path dir = prepare_output(cfg);
  std::vector<std::string> files;
  std::ostringstream grid_csv;
  grid_csv << "c,ess,ess_warning,shock,h,width68,width90\n";
  Rng rng(cfg.seed, {0x7e5});
  json ess_list = json::array();
  for (double c : grid) {
    const WeightedChain wc = reweight(chain, c, rw.ess_floor);
    if (wc.warning) log << "reweight: c=" << c_label(c) << ": " << *wc.warning << '\n';
    const IRFSummary summary = summarize_draws(chain.beta, n_x, H, wc.weights, names, scale);
    const std::string irf_name = "irf_c" + c_label(c) + ".csv";
    write_irf_csv(summary, dir / irf_name);
    files.push_back(irf_name);

    const std::string w_name = "weights_c" + c_label(c) + ".csv";
    {
      auto out = open_out(dir / w_name);
      out << "draw,log_lik,weight\n";
      for (Index s = 0; s < chain.draws(); ++s) out << s << ',' << fmt(chain.log_lik[s]) << ',' << fmt(wc.weights[s]) << '\n';
    }
    files.push_back(w_name);

    if (rw.n_out > 0) {
      const Chain res = resample(chain, wc.weights, rw.n_out, rng);
      const VectorXd u = VectorXd::Constant(res.draws(), 1.0 / static_cast<double>(res.draws()));
      const std::string r_name = "irf_c" + c_label(c) + "_resampled.csv";
      write_irf_csv(summarize_draws(res.beta, n_x, H, u, names, scale), dir / r_name);
      files.push_back(r_name);
    }

    const MatrixXd& q05 = summary.at_level(0.05);
    const MatrixXd& q16 = summary.at_level(0.16);
    const MatrixXd& q84 = summary.at_level(0.84);
    const MatrixXd& q95 = summary.at_level(0.95);
    for (Index i = 0; i < n_x; ++i)
      for (Index h = 0; h < H; ++h)
        grid_csv << c_label(c) << ',' << fmt(wc.ess) << ',' << (wc.warning ? 1 : 0) << ',' << names[i] << ',' << h
                 << ',' << fmt(q84(i, h) - q16(i, h)) << ',' << fmt(q95(i, h) - q05(i, h)) << '\n';
    ess_list.push_back({{"c", c}, {"ess", wc.ess}, {"warning", wc.warning.value_or("")}});
  }
  {
    auto out = open_out(dir / "grid.csv");
    out << grid_csv.str();
  }
  files.push_back("grid.csv");
  json extra = {{"chain_draws", chain.draws()}, {"ess", ess_list}, {"n_out", rw.n_out}};
  if (meta.contains("config_sha256")) extra["chain_config_sha256"] = meta["config_sha256"];
  write_manifest(dir, "reweight", cfg, files, extra);
  log << "reweight: " << grid.size() << " values of c written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_defaults(Index horizons, std::ostream& out) {
  out << std::setw(2) << to_json(default_hyperparameters(horizons)) << '\n';
  return kExitOk;
}

}  // namespace sulp::cli
