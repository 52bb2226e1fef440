#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cnls/errors.hpp"
#include "cnls/problem.hpp"
#include "cnls/solver.hpp"

namespace cnls::cli {

inline constexpr int kFormatVersion = 1;

/// Syntax errors carry line and column; semantic errors carry the dotted field path
/// (e.g. "problem.beta21") and the line of the offending key when there is one.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line, int column, std::string path)
      : Error(what), line_(line), column_(column), path_(std::move(path)) {}
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& path() const { return path_; }

 private:
  int line_;
  int column_;
  std::string path_;
};

/// Textual problem description; kept so the problem can be rebuilt on another grid.
struct ProblemSource {
  GridKind kind = GridKind::Interval;
  double size = 1.0;
  int dimension = 1;
  int nodes = 200;
  std::vector<int> decomposition;                   // a_0 = 0 < ... < a_m = d
  std::vector<std::string> potential;               // expression per component
  std::vector<std::vector<std::string>> coupling;   // expression per ordered pair
  std::vector<std::optional<double>> mu;            // unset: min of beta_ii over the nodes

  int components() const { return static_cast<int>(potential.size()); }
};

/// Sweep over a constant cross-group coupling beta_ij = beta_ji (0-based indices).
struct SweepSpec {
  int i = 0;
  int j = 1;
  std::vector<double> values;
};

struct OutputSpec {
  std::string directory;
  bool csv = true;
  bool json = true;
  bool svg = true;
};

struct RunConfig {
  int format_version = kFormatVersion;
  ProblemSource source;
  ProblemSpec problem;
  SolverConfig solver;
  std::optional<SweepSpec> sweep;
  OutputSpec output;
};

/// Samples the expressions on a grid with `nodes` interior points (source.nodes when unset)
/// and runs the structural checks. Throws ConfigError with a field path.
ProblemSpec build_problem(const ProblemSource& source, std::optional<int> nodes = std::nullopt);

/// Same problem with beta_ij = beta_ji replaced by the constant b.
ProblemSpec with_coupling(const ProblemSpec& spec, int i, int j, double b);

/// Grammar (one item per line; '#' starts a comment):
///   format_version = 1                      optional, before any section
///   [grid]     kind = interval | radial; size (length or radius; default 1 or 20);
///              dimension (radial: 1, 2 or 3); nodes
///   [problem]  components; decomposition = a_0, ..., a_m (default: all singletons);
///              V (all components), Vi, betaij or beta[i][j], mui  (1-based indices,
///              right-hand sides are expressions in x)
///   [solver]   max_iters, step0, armijo_c, backtrack, tol_tangent_grad, tol_nehari,
///              enforce_nonneg, require_E (true | false | auto), restarts, seed, parallel
///   [sweep]    parameter = beta[i][j]; values = v_1, ..., v_k  or  start, ratio, count
///              (ladder defaults: start = -1, ratio = 10, count = 4)
///   [output]   directory; formats = csv, json, svg
/// A missing beta_ji mirrors beta_ij. Off-diagonal couplings default to 0.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);

}  // namespace cnls::cli
