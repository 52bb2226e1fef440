#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cnls/cli/config.hpp"
#include "cnls/cli/io.hpp"

namespace cnls::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitConvergence = 3, kExitInvariant = 4 };

struct CommandOptions {
  std::string out_dir;                  // overrides output.directory; "." when both are empty
  std::optional<std::uint64_t> seed;    // overrides solver.seed
  std::optional<int> grid;              // overrides grid.nodes
  bool parallel_fresh = false;
  std::optional<std::string> solution;  // fields CSV for `check`
};

/// Applies --seed and --grid.
RunConfig apply_overrides(RunConfig config, const CommandOptions& options);

/// Writes fields.csv, report.json and components.svg.
int cmd_solve(const RunConfig& config, const CommandOptions& options, std::ostream& log);

struct SweepOutcome {
  SweepTable table;
  std::vector<State> states;  // same order as table
  int fallbacks = 0;          // warm solves replaced by the fresh baseline
};

/// Warm-started chain in ascending |b|, each point also solved fresh as a baseline; a warm
/// result above baseline + 1e-8 is replaced. parallel_fresh: independent fresh solves only.
/// Throws ConvergenceError when a point has no converged solve.
SweepOutcome run_sweep(const RunConfig& config, bool parallel_fresh);

/// Writes sweep.csv, sweep.json, sweep.svg and fields_<k>.csv per ladder point.
int cmd_sweep(const RunConfig& config, const CommandOptions& options, std::ostream& log);

struct CheckItem {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  bool informational = false;
};

/// Invariant battery on a stored state; second-variation values are informational.
std::vector<CheckItem> invariant_battery(const ProblemSpec& spec, const SolverConfig& solver, const State& u);

/// Hypotheses, non-existence detector and, with --solution, the invariant battery.
int cmd_check(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Oracle cross-validations on the problem rebuilt at 20 nodes (or --grid).
std::vector<CheckItem> oracle_battery(const RunConfig& config, std::optional<int> nodes);
int cmd_oracle(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Loads the config, applies overrides and dispatches on solve | sweep | check | oracle.
int run_command(const std::string& command, const std::string& config_path, const CommandOptions& options,
                std::ostream& log);

}  // namespace cnls::cli
