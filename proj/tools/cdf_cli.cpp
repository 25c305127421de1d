// stiefelcdf command-line front end.
//
//   stiefelcdf run <config>
//   stiefelcdf verify [--seed S] [--samples N]
//   stiefelcdf grid <config>

#include "stiefelcdf/stiefelcdf.h"

#include <CLI11.hpp>

#include <cstdint>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Nonsmooth optimization over the Stiefel manifold by constraint dissolving"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cdf_version()));

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run the solver described by a config file");
  run->add_option("config", run_config, "Run config (key = value lines)")
      ->required()
      ->check(CLI::ExistingFile);

  std::uint64_t seed = 0;
  int samples = 1000;
  auto* verify = app.add_subcommand("verify", "Check the kernel identities and bounds");
  verify->add_option("--seed", seed, "Sampling seed");
  verify->add_option("--samples", samples, "Samples per check")
      ->check(CLI::PositiveNumber);

  std::string grid_config;
  auto* grid = app.add_subcommand("grid", "Grid search for the initial step size");
  grid->add_option("config", grid_config, "Run config with budget_epochs")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Usage errors share the configuration error exit code.
    return code == 0 ? 0 : 3;
  }

  if (*run) return cdf_cmd_run(run_config.c_str());
  if (*verify) return cdf_cmd_verify(seed, samples);
  return cdf_cmd_grid(grid_config.c_str());
}
