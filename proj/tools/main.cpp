#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace sulp::cli;
  CLI::App app{"Bayesian seemingly unrelated local projections"};
  app.require_subcommand(1);

  std::filesystem::path config_path;
  Overrides overrides;
  std::uint64_t seed = 0;
  std::string output_dir;
  int threads = 0;
  std::string chain;
  int horizons = 17;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--output-dir", output_dir, "override output.directory");
    sub->add_option("--threads", threads, "override the worker thread count");
  };
  auto* estimate = app.add_subcommand("estimate", "estimate IRFs on a data file");
  auto* simulate = app.add_subcommand("simulate", "simulate a dataset and its true IRF");
  auto* montecarlo = app.add_subcommand("montecarlo", "run the Monte Carlo coverage study");
  auto* reweight = app.add_subcommand("reweight", "power-posterior reweighting of a stored chain");
  auto* defaults = app.add_subcommand("defaults", "print default hyperparameters as JSON");
  for (auto* sub : {estimate, simulate, montecarlo, reweight}) add_common(sub);
  reweight->add_option("--chain", chain, "chain manifest (chain.json)");
  reweight->add_option("--c", overrides.c_grid, "values of c in (0, 1]");
  defaults->add_option("--horizons", horizons, "number of horizons H")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (defaults->parsed()) return cmd_defaults(horizons, std::cout);

  return guarded(
      [&] {
        RunConfig config = load_config(config_path);
        if (app.get_subcommands().front()->count("--seed")) overrides.seed = seed;
        if (!output_dir.empty()) overrides.output_dir = output_dir;
        if (threads != 0) overrides.threads = threads;
        if (!chain.empty()) overrides.chain = chain;
        apply_overrides(config, overrides);
        if (estimate->parsed()) return cmd_estimate(config, std::cerr);
        if (simulate->parsed()) return cmd_simulate(config, std::cerr);
        if (montecarlo->parsed()) return cmd_montecarlo(config, std::cerr);
        return cmd_reweight(config, std::cerr);
      },
      std::cerr);
}
