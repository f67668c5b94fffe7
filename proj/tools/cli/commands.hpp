#pragma once

#include "cli/config.hpp"

#include <iosfwd>
#include <optional>

namespace sulp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitPartialFailure = 4,
};

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<int> threads;
  std::optional<std::filesystem::path> chain;
  std::vector<double> c_grid;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

int cmd_estimate(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_montecarlo(const RunConfig& config, std::ostream& log);
int cmd_reweight(const RunConfig& config, std::ostream& log);
/// Print the default hyperparameters for `horizons` as JSON.
int cmd_defaults(Index horizons, std::ostream& out);

/// Run `body`, mapping exceptions to exit codes and printing them to `err`.
template <class F>
int guarded(F&& body, std::ostream& err);

}  // namespace sulp::cli

#include "cli/guarded.inl"
