#include "sulp/harness.hpp"

#include "sulp/baselines.hpp"
#include "sulp/dataset.hpp"
#include "sulp/errors.hpp"
#include "sulp/power_posterior.hpp"
#include "sulp/summary.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace sulp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_bayesian(const std::string& name) { return name == "sulp" || name == "sulp_flat"; }

std::string alpha_label(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  return buf;
}

fs::path cell_dir(const MCConfig& config, Index T, double alpha) {
  return config.checkpoint_dir / ("T" + std::to_string(T) + "_alpha" + alpha_label(alpha));
}

fs::path rep_path(const MCConfig& config, Index T, double alpha, Index rep) {
  char name[32];
  std::snprintf(name, sizeof name, "rep_%05ld.json", static_cast<long>(rep));
  return cell_dir(config, T, alpha) / name;
}

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw DataError(DataError::Kind::MissingFile, "failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

json rep_to_json(Index rep, Index T, double alpha, const std::map<std::string, RepEstimate>& estimates,
                 const std::vector<double>& c_grid) {
  json j;
  j["rep"] = rep;
  j["T"] = T;
  j["alpha"] = alpha;
  json est = json::object();
  for (const auto& [name, e] : estimates) {
    json ej;
    ej["ok"] = e.ok;
    if (!e.ok) {
      ej["error"] = e.error;
    } else {
      ej["point"] = vec_json(e.point);
      ej["lower"] = vec_json(e.lower);
      ej["upper"] = vec_json(e.upper);
      if (!e.c_point.empty()) {
        json cj = json::array();
        for (std::size_t c = 0; c < c_grid.size(); ++c)
          cj.push_back({{"c", c_grid[c]},
                        {"ess", e.c_ess[c]},
                        {"point", vec_json(e.c_point[c])},
                        {"lower", vec_json(e.c_lower[c])},
                        {"upper", vec_json(e.c_upper[c])}});
        ej["coarsening"] = cj;
      }
    }
    est[name] = ej;
  }
  j["estimators"] = est;
  return j;
}

std::map<std::string, RepEstimate> rep_from_json(const json& j) {
  std::map<std::string, RepEstimate> out;
  for (const auto& [name, ej] : j.at("estimators").items()) {
    RepEstimate e;
    e.ok = ej.at("ok").get<bool>();
    if (!e.ok) {
      e.error = ej.value("error", "");
    } else {
      e.point = json_vec(ej.at("point"));
      e.lower = json_vec(ej.at("lower"));
      e.upper = json_vec(ej.at("upper"));
      if (ej.contains("coarsening")) {
        for (const auto& cj : ej.at("coarsening")) {
          e.c_ess.push_back(cj.at("ess").get<double>());
          e.c_point.push_back(json_vec(cj.at("point")));
          e.c_lower.push_back(json_vec(cj.at("lower")));
          e.c_upper.push_back(json_vec(cj.at("upper")));
        }
      }
    }
    out[name] = std::move(e);
  }
  return out;
}

std::uint64_t alpha_key(double alpha) { return std::bit_cast<std::uint64_t>(alpha); }

RepEstimate bayesian_estimate(const MCConfig& config, const SULPSystem& system, bool flat, double scale,
                              std::uint64_t seed) {
  const Index H = system.horizons();
  HyperParams hp = default_hyperparameters(H);
  if (flat) hp.irf_prior = IrfPrior::Flat;
  const ControlsPrior cp = minnesota_controls_prior(system.control_layout, H, false, hp.minnesota);
  SamplerConfig sc = config.sampler;
  sc.seed = seed;
  sc.store_gamma = false;
  sc.store_latent = false;
  const Chain chain = run_sampler(system, hp, cp, sc);

  const double tail = 0.5 * (1.0 - config.level);
  const std::vector<double> levels = {tail, 1.0 - tail};
  const VectorXd scale_vec = VectorXd::Constant(1, scale);
  auto fill = [&](const VectorXd& w, VectorXd& point, VectorXd& lower, VectorXd& upper) {
    const IRFSummary s = summarize_draws(chain.beta, 1, H, w, {"shock"}, scale_vec, levels);
    point = s.mean.row(0).transpose();
    lower = s.quantiles[0].row(0).transpose();
    upper = s.quantiles[1].row(0).transpose();
  };

  RepEstimate e;
  e.ok = true;
  fill(importance_weights(chain.log_lik, 1.0), e.point, e.lower, e.upper);
  for (double c : config.c_grid) {
    const WeightedChain wc = reweight(chain, c);
    VectorXd p, lo, hi;
    fill(wc.weights, p, lo, hi);
    e.c_point.push_back(p);
    e.c_lower.push_back(lo);
    e.c_upper.push_back(hi);
    e.c_ess.push_back(wc.ess);
  }
  return e;
}

RepEstimate classical_estimate(const MCConfig& config, const SULPSystem& system, bool smooth, double scale) {
  const ClassicalLPResult r = smooth ? smooth_lp(system) : ols_lp_hac(system);
  RepEstimate e;
  e.ok = true;
  const auto [lo, hi] = r.ci(config.level);
  e.point = r.beta_hat * scale;
  e.lower = lo * scale;
  e.upper = hi * scale;
  return e;
}

MCCell summarize_cell(const std::string& name, Index T, double alpha, double c, const VectorXd& beta_star,
                      const std::vector<const VectorXd*>& points, const std::vector<const VectorXd*>& lowers,
                      const std::vector<const VectorXd*>& uppers, Index failed) {
  MCCell cell;
  cell.estimator = name;
  cell.T = T;
  cell.alpha = alpha;
  cell.c = c;
  cell.beta_star = beta_star;
  cell.n_ok = static_cast<Index>(points.size());
  cell.n_failed = failed;
  const Index H = beta_star.size();
  MatrixXd p(cell.n_ok, H), lo(cell.n_ok, H), hi(cell.n_ok, H);
  for (Index r = 0; r < cell.n_ok; ++r) {
    p.row(r) = points[r]->transpose();
    lo.row(r) = lowers[r]->transpose();
    hi.row(r) = uppers[r]->transpose();
  }
  if (cell.n_ok > 0) {
    cell.coverage = coverage(lo, hi, beta_star);
    cell.width = (hi - lo).colwise().mean().transpose();
  }
  if (cell.n_ok >= 2) cell.metrics = normalized_bias_std(p, beta_star);
  return cell;
}

}  // namespace

const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names = {"sulp", "sulp_flat", "lp_default", "lp_smooth"};
  return names;
}

void MCConfig::validate() const {
  auto fail = [](const std::string& m) { throw DataError(DataError::Kind::InvalidSpec, "montecarlo: " + m); };
  if (n_reps < 1) fail("n_reps must be at least 1");
  if (T_grid.empty() || alpha_grid.empty()) fail("T and alpha grids must be non-empty");
  if (!(level > 0.0 && level < 1.0)) fail("coverage level must lie in (0, 1)");
  if (max_horizon < 0) fail("max_horizon must be non-negative");
  if (control_lags < 1) fail("control_lags must be at least 1");
  if (threads < 1) fail("threads must be at least 1");
  if (checkpoint_dir.empty()) fail("a checkpoint directory is required");
  for (const auto& e : estimators)
    if (std::find(known_estimators().begin(), known_estimators().end(), e) == known_estimators().end())
      fail("unknown estimator '" + e + "'");
  for (double c : c_grid)
    if (!(c > 0.0 && c <= 1.0)) fail("coarsening values must lie in (0, 1]");
  for (Index T : T_grid)
    if (T < control_lags + max_horizon + 10) fail("T too small for the lag and horizon settings");
  sampler.validate();
  dgp.validate();
}

json MCConfig::fingerprint() const {
  json j;
  j["T_grid"] = T_grid;
  j["alpha_grid"] = alpha_grid;
  j["max_horizon"] = max_horizon;
  j["estimators"] = estimators;
  j["level"] = level;
  j["c_grid"] = c_grid;
  j["seed"] = seed;
  j["control_lags"] = control_lags;
  j["burn"] = burn;
  j["sampler"] = {{"n_draws", sampler.n_draws},
                  {"burn_in", sampler.burn_in},
                  {"thin", sampler.thin},
                  {"mh_step_xi", sampler.mh_step_xi},
                  {"mh_step_varsigma", sampler.mh_step_varsigma},
                  {"adapt_target", sampler.adapt_target}};
  json phi = json::array();
  for (const auto& m : dgp.Phi) phi.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  j["dgp"] = {{"n", dgp.n},
              {"P", dgp.P},
              {"J", dgp.J},
              {"pi", dgp.pi},
              {"ma_seed", dgp.ma_seed},
              {"target_index", dgp.target_index},
              {"shock_index", dgp.shock_index},
              {"Phi", phi},
              {"H", std::vector<double>(dgp.impact.data(), dgp.impact.data() + dgp.impact.size())}};
  return j;
}

double irf_normalizer(const VectorXd& beta_star) {
  const Index htilde = beta_star.size() - 1;
  const double ss = beta_star.squaredNorm();
  if (!(ss > 0.0) || htilde < 1)
    throw NumericalError(NumericalError::Kind::NormalizerZero, "true IRF normalizer is zero");
  return std::sqrt(ss / static_cast<double>(htilde));
}

VectorXd coverage(const MatrixXd& lower, const MatrixXd& upper, const VectorXd& beta_star) {
  const Index R = lower.rows();
  VectorXd out = VectorXd::Zero(beta_star.size());
  for (Index h = 0; h < beta_star.size(); ++h) {
    Index hits = 0;
    for (Index r = 0; r < R; ++r)
      if (lower(r, h) <= beta_star[h] && beta_star[h] <= upper(r, h)) ++hits;
    out[h] = R > 0 ? static_cast<double>(hits) / static_cast<double>(R) : 0.0;
  }
  return out;
}

BiasStd normalized_bias_std(const MatrixXd& estimates, const VectorXd& beta_star) {
  const Index R = estimates.rows();
  const Index H = beta_star.size();
  if (R < 2) throw NumericalError(NumericalError::Kind::Degenerate, "need at least two replications");
  const double norm = irf_normalizer(beta_star);
  BiasStd out;
  out.bias.resize(H);
  out.std.resize(H);
  out.median_abs.resize(H);
  out.q25_abs.resize(H);
  out.q75_abs.resize(H);
  const VectorXd uniform = VectorXd::Ones(R);
  for (Index h = 0; h < H; ++h) {
    const VectorXd col = estimates.col(h);
    const double mean = col.mean();
    out.bias[h] = std::abs(mean - beta_star[h]) / norm;
    out.std[h] = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(R - 1)) / norm;
    const VectorXd abs_err = (col.array() - beta_star[h]).abs() / norm;
    const VectorXd q = weighted_quantiles(abs_err, uniform, {0.25, 0.5, 0.75});
    out.q25_abs[h] = q[0];
    out.median_abs[h] = q[1];
    out.q75_abs[h] = q[2];
  }
  return out;
}

const MCCell* MCResult::find(const std::string& estimator, Index T, double alpha) const {
  for (const auto& c : cells)
    if (c.estimator == estimator && c.T == T && c.alpha == alpha) return &c;
  return nullptr;
}

const MCCell* MCResult::find_coarsened(const std::string& estimator, Index T, double alpha, double c) const {
  for (const auto& cell : coarsening)
    if (cell.estimator == estimator && cell.T == T && cell.alpha == alpha && std::abs(cell.c - c) < 1e-12) return &cell;
  return nullptr;
}

double MCResult::worst_failure_rate() const {
  double worst = 0.0;
  for (const auto& c : cells) {
    const Index total = c.n_ok + c.n_failed;
    if (total > 0) worst = std::max(worst, static_cast<double>(c.n_failed) / static_cast<double>(total));
  }
  return worst;
}

std::map<std::string, RepEstimate> run_replication(const MCConfig& config, Index T, double alpha, Index rep) {
  const std::uint64_t base = substream_seed(config.seed, {static_cast<std::uint64_t>(T), alpha_key(alpha),
                                                          static_cast<std::uint64_t>(rep)});
  std::map<std::string, RepEstimate> out;
  auto fail_all = [&](const std::string& msg) {
    for (const auto& name : config.estimators) out[name] = RepEstimate{false, msg, {}, {}, {}, {}, {}, {}, {}};
    return out;
  };

  VARMAParams params = config.dgp;
  params.alpha = alpha;
  SULPSystem system;
  double scale = 1.0;
  try {
    Rng sim_rng(base, {0});
    const VARMASimulation sim = simulate_varma(params, T, sim_rng, config.burn);
    TimeSeriesDataset data;
    for (Index v = 0; v < params.n; ++v)
      data.names.push_back(v < static_cast<Index>(params.variables.size()) ? params.variables[v]
                                                                           : "w" + std::to_string(v));
    data.names.push_back("shock");
    data.values.resize(T, params.n + 1);
    data.values.leftCols(params.n) = sim.data;
    data.values.col(params.n) = sim.shocks.col(params.shock_index);
    for (Index t = 0; t < T; ++t) data.time_index.push_back(std::to_string(t + 1));

    const auto [std_data, scaling] = standardize(data);
    DesignSpec spec;
    spec.target = data.names[params.target_index];
    spec.shocks = {ShockSpec{"shock", "shock", {}}};
    for (Index v = 0; v < params.n; ++v)
      if (v != params.target_index) spec.lagged_columns.push_back(data.names[v]);
    spec.lags = config.control_lags;
    spec.max_horizon = static_cast<int>(config.max_horizon);
    system = build_design(std_data, spec);
    scale = scaling.at(spec.target).std / scaling.at("shock").std;
  } catch (const std::exception& e) {
    return fail_all(std::string("simulation: ") + e.what());
  }

  for (std::size_t i = 0; i < config.estimators.size(); ++i) {
    const auto& name = config.estimators[i];
    try {
      if (name == "sulp")
        out[name] = bayesian_estimate(config, system, false, scale, substream_seed(base, {1}));
      else if (name == "sulp_flat")
        out[name] = bayesian_estimate(config, system, true, scale, substream_seed(base, {2}));
      else if (name == "lp_default")
        out[name] = classical_estimate(config, system, false, scale);
      else
        out[name] = classical_estimate(config, system, true, scale);
    } catch (const std::exception& e) {
      out[name] = RepEstimate{false, e.what(), {}, {}, {}, {}, {}, {}, {}};
    }
  }
  return out;
}

MCResult run_monte_carlo(const MCConfig& config) {
  config.validate();
  fs::create_directories(config.checkpoint_dir);
  const fs::path fp_path = config.checkpoint_dir / "config.json";
  const json fp = config.fingerprint();
  if (fs::exists(fp_path)) {
    std::ifstream in(fp_path);
    json existing;
    try {
      in >> existing;
    } catch (const json::exception&) {
      existing = nullptr;
    }
    if (existing != fp)
      throw DataError(DataError::Kind::InvalidSpec, "checkpoint directory '" + config.checkpoint_dir.string() +
                                                        "' belongs to a different configuration");
  } else {
    write_atomic(fp_path, fp.dump(2) + "\n");
  }

  struct Task {
    Index T;
    double alpha;
    Index rep;
  };
  std::vector<Task> tasks;
  for (Index T : config.T_grid) {
    for (double alpha : config.alpha_grid) {
      fs::create_directories(cell_dir(config, T, alpha));
      for (Index r = 0; r < config.n_reps; ++r)
        if (!fs::exists(rep_path(config, T, alpha, r))) tasks.push_back({T, alpha, r});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<Index> done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      try {
        const auto est = run_replication(config, t.T, t.alpha, t.rep);
        write_atomic(rep_path(config, t.T, t.alpha, t.rep),
                     rep_to_json(t.rep, t.T, t.alpha, est, config.c_grid).dump() + "\n");
      } catch (...) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
        return;
      }
      const Index finished = ++done;
      if (config.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        config.progress("T=" + std::to_string(t.T) + " alpha=" + alpha_label(t.alpha), finished,
                        static_cast<Index>(tasks.size()));
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(config.threads, static_cast<int>(tasks.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return aggregate_monte_carlo(config);
}

MCResult aggregate_monte_carlo(const MCConfig& config) {
  MCResult result;
  for (Index T : config.T_grid) {
    for (double alpha : config.alpha_grid) {
      VARMAParams params = config.dgp;
      params.alpha = alpha;
      const VectorXd beta_star =
          true_irf(params, T, params.target_index, params.shock_index, config.max_horizon).beta_star;

      std::vector<std::map<std::string, RepEstimate>> reps;
      for (Index r = 0; r < config.n_reps; ++r) {
        const fs::path p = rep_path(config, T, alpha, r);
        std::ifstream in(p);
        if (!in) throw DataError(DataError::Kind::MissingFile, "missing checkpoint '" + p.string() + "'");
        json j;
        try {
          in >> j;
          reps.push_back(rep_from_json(j));
        } catch (const json::exception& e) {
          throw DataError(DataError::Kind::Schema, "corrupt checkpoint '" + p.string() + "': " + e.what());
        }
      }

      for (const auto& name : config.estimators) {
        std::vector<const VectorXd*> pts, los, his;
        Index failed = 0;
        for (const auto& rep : reps) {
          const auto it = rep.find(name);
          if (it == rep.end() || !it->second.ok) {
            ++failed;
            continue;
          }
          pts.push_back(&it->second.point);
          los.push_back(&it->second.lower);
          his.push_back(&it->second.upper);
        }
        result.cells.push_back(summarize_cell(name, T, alpha, 1.0, beta_star, pts, los, his, failed));

        if (!is_bayesian(name)) continue;
        for (std::size_t c = 0; c < config.c_grid.size(); ++c) {
          std::vector<const VectorXd*> cp, cl, cu;
          double ess = 0.0;
          for (const auto& rep : reps) {
            const auto it = rep.find(name);
            if (it == rep.end() || !it->second.ok || it->second.c_point.size() <= c) continue;
            cp.push_back(&it->second.c_point[c]);
            cl.push_back(&it->second.c_lower[c]);
            cu.push_back(&it->second.c_upper[c]);
            ess += it->second.c_ess[c];
          }
          MCCell cell = summarize_cell(name, T, alpha, config.c_grid[c], beta_star, cp, cl, cu, failed);
          cell.mean_ess = cp.empty() ? 0.0 : ess / static_cast<double>(cp.size());
          result.coarsening.push_back(std::move(cell));
        }
      }
    }
  }
  return result;
}

void write_mc_csv(const MCResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Kind::MissingFile, "cannot write '" + path.string() + "'");
  out << "estimator,T,alpha,c,h,metric,value\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto emit_cell = [&](const MCCell& cell) {
    const std::string prefix = cell.estimator + "," + std::to_string(cell.T) + "," + num(cell.alpha) + "," + num(cell.c) + ",";
    auto row = [&](Index h, const char* metric, double value) {
      out << prefix << h << ',' << metric << ',' << num(value) << '\n';
    };
    for (Index h = 0; h < cell.beta_star.size(); ++h) {
      row(h, "beta_star", cell.beta_star[h]);
      row(h, "n_ok", static_cast<double>(cell.n_ok));
      row(h, "n_failed", static_cast<double>(cell.n_failed));
      if (cell.coverage.size() > 0) {
        row(h, "coverage", cell.coverage[h]);
        row(h, "width", cell.width[h]);
      }
      if (cell.metrics.bias.size() > 0) {
        row(h, "bias", cell.metrics.bias[h]);
        row(h, "std", cell.metrics.std[h]);
        row(h, "abs_err_q25", cell.metrics.q25_abs[h]);
        row(h, "abs_err_median", cell.metrics.median_abs[h]);
        row(h, "abs_err_q75", cell.metrics.q75_abs[h]);
      }
      if (cell.mean_ess > 0.0) row(h, "mean_ess", cell.mean_ess);
    }
  };
  for (const auto& c : result.cells) emit_cell(c);
  for (const auto& c : result.coarsening) emit_cell(c);
}

}  // namespace sulp
