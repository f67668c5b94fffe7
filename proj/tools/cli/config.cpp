#include "cli/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace sulp::cli {
namespace {

namespace fs = std::filesystem;

class Reader {
 public:
  Reader(std::string source, fs::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    std::ostringstream out;
    out << source_;
    if (node.IsDefined() && node.Mark().line >= 0) out << ':' << node.Mark().line + 1;
    out << ": " << msg;
    throw ConfigError(out.str());
  }

  void require_map(const YAML::Node& node, const std::string& where) const {
    if (!node.IsMap()) fail(node, "'" + where + "' must be a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) const {
    require_map(node, where);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in '" + where + "'");
    }
  }

  template <class T>
  void read(const YAML::Node& parent, const char* key, T& out, const std::string& where) const {
    const YAML::Node node = parent[key];
    if (!node.IsDefined() || node.IsNull()) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value for '" + where + "." + key + "'");
    }
  }

  void read_path(const YAML::Node& parent, const char* key, fs::path& out, const std::string& where) const {
    std::string s;
    read(parent, key, s, where);
    if (s.empty()) return;
    fs::path p(s);
    out = p.is_absolute() || base_.empty() ? p : base_ / p;
  }

  template <class T>
  void read_list(const YAML::Node& parent, const char* key, std::vector<T>& out, const std::string& where) const {
    const YAML::Node node = parent[key];
    if (!node.IsDefined() || node.IsNull()) return;
    if (!node.IsSequence()) fail(node, "'" + where + "." + key + "' must be a list");
    std::vector<T> values;
    for (const auto& item : node) {
      try {
        values.push_back(item.as<T>());
      } catch (const YAML::Exception&) {
        fail(item, "invalid entry in '" + where + "." + key + "'");
      }
    }
    out = std::move(values);
  }

 private:
  std::string source_;
  fs::path base_;
};

void parse_spec(const Reader& r, const YAML::Node& node, SpecSection& spec) {
  r.check_keys(node, "spec",
               {"target", "shocks", "contemporaneous", "lagged", "lags", "max_horizon", "long_differences",
                "intercept", "trend", "target_in_levels", "lag_target", "lag_shocks", "stochastic_volatility",
                "correlated_measurement_errors", "common_factor", "principal_component"});
  auto& d = spec.design;
  r.read(node, "target", d.target, "spec");
  r.read_list(node, "contemporaneous", d.contemporaneous_columns, "spec");
  r.read_list(node, "lagged", d.lagged_columns, "spec");
  r.read(node, "lags", d.lags, "spec");
  r.read(node, "max_horizon", d.max_horizon, "spec");
  r.read(node, "long_differences", d.long_differences, "spec");
  r.read(node, "intercept", d.include_intercept, "spec");
  r.read(node, "trend", d.include_trend, "spec");
  r.read(node, "target_in_levels", d.target_in_levels, "spec");
  r.read(node, "lag_target", d.lag_target, "spec");
  r.read(node, "lag_shocks", d.lag_shocks, "spec");
  r.read(node, "stochastic_volatility", d.stochastic_volatility, "spec");
  r.read(node, "correlated_measurement_errors", d.correlated_measurement_errors, "spec");
  r.read(node, "common_factor", spec.common_factor, "spec");
  r.read(node, "principal_component", spec.principal_component, "spec");

  const YAML::Node shocks = node["shocks"];
  if (!shocks.IsDefined() || !shocks.IsSequence() || shocks.size() == 0)
    r.fail(shocks.IsDefined() ? shocks : node, "'spec.shocks' must be a non-empty list");
  for (const auto& s : shocks) {
    r.check_keys(s, "spec.shocks[]", {"name", "observed", "instruments"});
    ShockSpec shock;
    r.read(s, "name", shock.name, "spec.shocks[]");
    r.read(s, "observed", shock.observed_column, "spec.shocks[]");
    r.read_list(s, "instruments", shock.instruments, "spec.shocks[]");
    if (shock.name.empty()) shock.name = shock.observed_column.empty() ? "shock" : shock.observed_column;
    if (shock.observed_column.empty() == shock.instruments.empty())
      r.fail(s, "shock '" + shock.name + "' needs exactly one of 'observed' or 'instruments'");
    if (shock.instruments.size() > 1 && !spec.common_factor && !spec.principal_component)
      r.fail(s, "shock '" + shock.name + "' lists several instruments: set spec.common_factor or spec.principal_component");
    d.shocks.push_back(std::move(shock));
  }
  if (d.target.empty()) r.fail(node, "'spec.target' is required");
}

void parse_priors(const Reader& r, const YAML::Node& node, RunConfig& cfg) {
  r.check_keys(node, "priors", {"irf_prior", "flat_variance", "kernel", "ng", "minnesota", "cov", "measurement", "sv"});
  auto& hp = cfg.priors;
  std::string irf = "gp";
  r.read(node, "irf_prior", irf, "priors");
  if (irf == "gp")
    hp.irf_prior = IrfPrior::GaussianProcess;
  else if (irf == "flat")
    hp.irf_prior = IrfPrior::Flat;
  else
    r.fail(node["irf_prior"], "priors.irf_prior must be 'gp' or 'flat'");
  r.read(node, "flat_variance", hp.flat_variance, "priors");

  if (const auto k = node["kernel"]; k.IsDefined()) {
    r.check_keys(k, "priors.kernel",
                 {"xi_low", "xi_high", "varsigma_low", "varsigma_high", "m_xi", "v_xi", "m_varsigma", "v_varsigma"});
    auto& kp = hp.kernel;
    r.read(k, "xi_low", kp.xi_low, "priors.kernel");
    r.read(k, "xi_high", kp.xi_high, "priors.kernel");
    r.read(k, "varsigma_low", kp.varsigma_low, "priors.kernel");
    r.read(k, "varsigma_high", kp.varsigma_high, "priors.kernel");
    r.read(k, "m_xi", kp.m_xi, "priors.kernel");
    r.read(k, "v_xi", kp.v_xi, "priors.kernel");
    r.read(k, "m_varsigma", kp.m_varsigma, "priors.kernel");
    r.read(k, "v_varsigma", kp.v_varsigma, "priors.kernel");
    if (!(kp.xi_low >= 0.0 && kp.xi_low < kp.xi_high && kp.varsigma_low <= kp.varsigma_high && kp.v_xi > 0.0 &&
          kp.v_varsigma > 0.0))
      r.fail(k, "inconsistent kernel bounds or variances");
  }
  if (const auto n = node["ng"]; n.IsDefined()) {
    r.check_keys(n, "priors.ng", {"a_tau", "b_tau", "theta"});
    r.read(n, "a_tau", hp.ng.a_tau, "priors.ng");
    r.read(n, "b_tau", hp.ng.b_tau, "priors.ng");
    r.read(n, "theta", hp.ng.theta, "priors.ng");
    if (!(hp.ng.a_tau > 0.0 && hp.ng.b_tau > 0.0 && hp.ng.theta > 0.0)) r.fail(n, "NG parameters must be positive");
  }
  if (const auto m = node["minnesota"]; m.IsDefined()) {
    r.check_keys(m, "priors.minnesota", {"kappa_own", "kappa_cross", "kappa_det", "levels"});
    r.read(m, "kappa_own", hp.minnesota.kappa_own, "priors.minnesota");
    r.read(m, "kappa_cross", hp.minnesota.kappa_cross, "priors.minnesota");
    r.read(m, "kappa_det", hp.minnesota.kappa_det, "priors.minnesota");
    r.read(m, "levels", cfg.minnesota_levels, "priors.minnesota");
  }
  if (const auto c = node["cov"]; c.IsDefined()) {
    r.check_keys(c, "priors.cov", {"scale"});
    r.read(c, "scale", hp.cov.scale, "priors.cov");
    if (!(hp.cov.scale > 0.0)) r.fail(c, "priors.cov.scale must be positive");
  }
  if (const auto m = node["measurement"]; m.IsDefined()) {
    r.check_keys(m, "priors.measurement", {"phi_mean", "phi_var", "phi_positive", "delta_var", "a_nu", "b_nu"});
    auto& mp = hp.measurement;
    r.read(m, "phi_mean", mp.phi_mean, "priors.measurement");
    r.read(m, "phi_var", mp.phi_var, "priors.measurement");
    r.read(m, "phi_positive", mp.phi_positive, "priors.measurement");
    r.read(m, "delta_var", mp.delta_var, "priors.measurement");
    r.read(m, "a_nu", mp.a_nu, "priors.measurement");
    r.read(m, "b_nu", mp.b_nu, "priors.measurement");
  }
  if (const auto s = node["sv"]; s.IsDefined()) {
    r.check_keys(s, "priors.sv", {"rho_mean", "rho_var", "a_vol", "b_vol"});
    r.read(s, "rho_mean", hp.sv.rho_mean, "priors.sv");
    r.read(s, "rho_var", hp.sv.rho_var, "priors.sv");
    r.read(s, "a_vol", hp.sv.a_vol, "priors.sv");
    r.read(s, "b_vol", hp.sv.b_vol, "priors.sv");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base_dir, const std::string& source_name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ": YAML syntax error: " + e.msg);
  }
  RunConfig cfg;
  cfg.text = text;
  if (!base_dir.empty()) cfg.output.directory = base_dir / cfg.output.directory;
  if (root.IsNull()) return cfg;
  const Reader r(source_name, base_dir);
  r.check_keys(root, "<root>",
               {"data", "spec", "priors", "sampler", "output", "simulate", "montecarlo", "reweight", "seed", "threads"});
  r.read(root, "seed", cfg.seed, "<root>");
  r.read(root, "threads", cfg.threads, "<root>");
  if (cfg.threads < 1) r.fail(root["threads"], "threads must be at least 1");

  if (const auto d = root["data"]; d.IsDefined()) {
    r.check_keys(d, "data", {"path", "time_column"});
    r.read_path(d, "path", cfg.data.path, "data");
    r.read(d, "time_column", cfg.data.time_column, "data");
  }
  if (const auto s = root["spec"]; s.IsDefined()) parse_spec(r, s, cfg.spec);
  if (const auto p = root["priors"]; p.IsDefined()) parse_priors(r, p, cfg);
  if (const auto s = root["sampler"]; s.IsDefined()) {
    r.check_keys(s, "sampler",
                 {"n_draws", "burn_in", "thin", "mh_step_xi", "mh_step_varsigma", "adapt_target", "store_gamma"});
    auto& sc = cfg.sampler;
    r.read(s, "n_draws", sc.n_draws, "sampler");
    r.read(s, "burn_in", sc.burn_in, "sampler");
    r.read(s, "thin", sc.thin, "sampler");
    r.read(s, "mh_step_xi", sc.mh_step_xi, "sampler");
    r.read(s, "mh_step_varsigma", sc.mh_step_varsigma, "sampler");
    r.read(s, "adapt_target", sc.adapt_target, "sampler");
    r.read(s, "store_gamma", sc.store_gamma, "sampler");
    try {
      sc.validate();
    } catch (const std::exception& e) {
      r.fail(s, e.what());
    }
  }
  if (const auto o = root["output"]; o.IsDefined()) {
    r.check_keys(o, "output", {"directory", "chain", "beta_csv"});
    r.read_path(o, "directory", cfg.output.directory, "output");
    r.read(o, "chain", cfg.output.chain, "output");
    r.read(o, "beta_csv", cfg.output.beta_csv, "output");
  }
  if (const auto s = root["simulate"]; s.IsDefined()) {
    r.check_keys(s, "simulate", {"dgp", "calibration", "alpha", "preset", "T", "burn", "rho", "max_horizon"});
    auto& sim = cfg.simulate;
    r.read(s, "dgp", sim.dgp, "simulate");
    if (sim.dgp != "varma" && sim.dgp != "ar1") r.fail(s["dgp"], "simulate.dgp must be 'varma' or 'ar1'");
    r.read_path(s, "calibration", sim.calibration, "simulate");
    if (s["alpha"].IsDefined()) {
      double a = 0.0;
      r.read(s, "alpha", a, "simulate");
      sim.alpha = a;
    }
    if (s["preset"].IsDefined()) {
      std::string preset;
      r.read(s, "preset", preset, "simulate");
      try {
        sim.alpha = alpha_preset(preset);
      } catch (const std::exception& e) {
        r.fail(s["preset"], e.what());
      }
    }
    r.read(s, "T", sim.T, "simulate");
    r.read(s, "burn", sim.burn, "simulate");
    r.read(s, "rho", sim.rho, "simulate");
    r.read(s, "max_horizon", sim.max_horizon, "simulate");
    if (sim.T < 2) r.fail(s, "simulate.T must be at least 2");
  }
  if (const auto m = root["montecarlo"]; m.IsDefined()) {
    r.check_keys(m, "montecarlo",
                 {"calibration", "checkpoint_dir", "n_reps", "T", "alpha", "max_horizon", "estimators", "level",
                  "c_grid", "control_lags", "burn"});
    auto& mc = cfg.montecarlo;
    r.read_path(m, "calibration", mc.calibration, "montecarlo");
    r.read_path(m, "checkpoint_dir", mc.checkpoint_dir, "montecarlo");
    r.read(m, "n_reps", mc.n_reps, "montecarlo");
    r.read_list(m, "T", mc.T_grid, "montecarlo");
    r.read_list(m, "alpha", mc.alpha_grid, "montecarlo");
    r.read(m, "max_horizon", mc.max_horizon, "montecarlo");
    r.read_list(m, "estimators", mc.estimators, "montecarlo");
    r.read(m, "level", mc.level, "montecarlo");
    r.read_list(m, "c_grid", mc.c_grid, "montecarlo");
    r.read(m, "control_lags", mc.control_lags, "montecarlo");
    r.read(m, "burn", mc.burn, "montecarlo");
    for (const auto& e : mc.estimators)
      if (std::find(known_estimators().begin(), known_estimators().end(), e) == known_estimators().end())
        r.fail(m["estimators"], "unknown estimator '" + e + "'");
    if (mc.n_reps < 1) r.fail(m["n_reps"], "montecarlo.n_reps must be at least 1");
  }
  if (const auto w = root["reweight"]; w.IsDefined()) {
    r.check_keys(w, "reweight", {"chain", "c", "n_out", "ess_floor"});
    r.read_path(w, "chain", cfg.reweight.chain, "reweight");
    r.read_list(w, "c", cfg.reweight.c_grid, "reweight");
    r.read(w, "n_out", cfg.reweight.n_out, "reweight");
    r.read(w, "ess_floor", cfg.reweight.ess_floor, "reweight");
    for (double c : cfg.reweight.c_grid)
      if (!(c > 0.0 && c <= 1.0)) r.fail(w["c"], "reweight.c values must lie in (0, 1]");
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str(), path.parent_path(), path.string());
  cfg.source = path;
  return cfg;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

}  // namespace sulp::cli
