#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "cnls/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ground states of coupled cubic Schroedinger systems on Nehari-type manifolds"};
  app.require_subcommand(1);

  std::string config_path;
  cnls::cli::CommandOptions options;
  std::uint64_t seed = 0;
  int grid = 0;
  std::string solution;

  const std::pair<const char*, const char*> subcommands[] = {
      {"solve", "multi-start ground state; writes fields.csv, report.json, components.svg"},
      {"sweep", "warm-started competition ladder; writes sweep.csv, sweep.json, sweep.svg"},
      {"check", "hypotheses, non-existence detector and, with --solution, the invariant battery"},
      {"oracle", "cross-check core routines against brute-force references on a coarse grid"},
  };
  for (const auto& [name, description] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "problem config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", options.out_dir, "output directory");
    sub->add_option("--seed", seed, "base seed for the multi-start");
    sub->add_option("--grid", grid, "number of interior nodes")->check(CLI::PositiveNumber);
    sub->add_flag("--parallel-fresh", options.parallel_fresh, "sweep: independent fresh solves in parallel");
    sub->add_option("--solution", solution, "check: fields CSV to audit")->check(CLI::ExistingFile);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cnls::cli::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--grid")) options.grid = grid;
  if (sub->count("--solution")) options.solution = solution;
  try {
    return cnls::cli::run_command(sub->get_name(), config_path, options, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
