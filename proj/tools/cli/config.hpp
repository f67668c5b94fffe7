#pragma once

#include <sulp/dataset.hpp>
#include <sulp/harness.hpp>
#include <sulp/priors.hpp>
#include <sulp/sampler.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sulp::cli {

/// Invalid configuration. The message carries file and line when known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSection {
  std::filesystem::path path;
  std::string time_column = "time";
};

struct SpecSection {
  DesignSpec design;
  bool common_factor = false;        // several instruments measure one latent shock
  bool principal_component = false;  // replace each shock's instruments by their first PC
};

struct OutputSection {
  std::filesystem::path directory = "out";
  bool chain = true;
  bool beta_csv = false;
};

struct SimulateSection {
  std::string dgp = "varma";  // varma | ar1
  std::filesystem::path calibration;
  std::optional<double> alpha;
  Index T = 250;
  Index burn = 1000;
  double rho = 0.8;
  Index max_horizon = 16;
};

struct MonteCarloSection {
  std::filesystem::path calibration;
  std::filesystem::path checkpoint_dir;  // default: <output>/checkpoints
  Index n_reps = 200;
  std::vector<Index> T_grid = {250};
  std::vector<double> alpha_grid = {2.0};
  Index max_horizon = 16;
  std::vector<std::string> estimators = {"sulp", "sulp_flat", "lp_default", "lp_smooth"};
  double level = 0.90;
  std::vector<double> c_grid;
  int control_lags = 4;
  Index burn = 1000;
};

struct ReweightSection {
  std::filesystem::path chain;
  std::vector<double> c_grid;
  Index n_out = 0;  // 0: no resampled output
  double ess_floor = 0.01;
};

struct RunConfig {
  std::filesystem::path source;  // config file path, empty when built in code
  std::string text;              // raw config text, hashed into manifests
  DataSection data;
  SpecSection spec;
  HyperParams priors;            // horizon-dependent parts filled at run time
  bool minnesota_levels = false;
  SamplerConfig sampler;
  OutputSection output;
  SimulateSection simulate;
  MonteCarloSection montecarlo;
  ReweightSection reweight;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Parse YAML text. Unknown keys and type errors raise ConfigError with the
/// line number. Relative paths are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                       const std::string& source_name = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace sulp::cli
