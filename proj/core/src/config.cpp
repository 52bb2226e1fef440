#include "cnls/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "cnls/cli/expression.hpp"

namespace cnls::cli {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  int value_column = 0;
};

// section -> key -> entry; the top level uses section "".
using Table = std::map<std::string, std::map<std::string, Entry>>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void syntax(const std::string& msg, int line, int column) {
  throw ConfigError("config:" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg, line, column, "");
}

[[noreturn]] void semantic(const std::string& path, const std::string& msg, int line = 0) {
  std::string where = "config: " + path;
  if (line > 0) where = "config:" + std::to_string(line) + ": " + path;
  throw ConfigError(where + ": " + msg, line, 0, path);
}

Table tokenize(const std::string& text) {
  Table t;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string stripped = raw.substr(0, raw.find('#'));
    const std::string s = trim(stripped);
    if (s.empty()) continue;
    const int indent = static_cast<int>(stripped.find_first_not_of(" \t")) + 1;
    if (s.front() == '[') {
      if (s.back() != ']') syntax("unterminated section header", line, indent + static_cast<int>(s.size()));
      section = trim(s.substr(1, s.size() - 2));
      static const std::vector<std::string> known{"grid", "problem", "solver", "sweep", "output"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        syntax("unknown section [" + section + "]", line, indent + 1);
      }
      if (t.count(section)) syntax("duplicate section [" + section + "]", line, indent);
      t[section];
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) syntax("expected 'key = value'", line, indent);
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) syntax("missing key before '='", line, static_cast<int>(eq) + 1);
    const std::string value = trim(stripped.substr(eq + 1));
    const auto vpos = stripped.find_first_not_of(" \t", eq + 1);
    const int vcol = vpos == std::string::npos ? static_cast<int>(eq) + 2 : static_cast<int>(vpos) + 1;
    if (value.empty()) syntax("missing value for '" + key + "'", line, vcol);
    if (t[section].count(key)) syntax("duplicate key '" + key + "'", line, indent);
    t[section][key] = Entry{value, line, vcol};
  }
  return t;
}

class Reader {
 public:
  Reader(const Table& t, std::string section) : section_(std::move(section)) {
    auto it = t.find(section_);
    if (it != t.end()) entries_ = it->second;
  }

  std::string path(const std::string& key) const { return section_.empty() ? key : section_ + "." + key; }

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  double number(const std::string& key, double fallback) {
    const Entry* e = find(key);
    return e ? to_number(key, *e) : fallback;
  }

  double to_number(const std::string& key, const Entry& e) const {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || trim(end).size() != 0 || !std::isfinite(v)) {
      syntax("'" + path(key) + "' expects a number, got '" + e.value + "'", e.line, e.value_column);
    }
    return v;
  }

  int integer(const std::string& key, int fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    const double v = to_number(key, *e);
    if (v != std::floor(v) || std::abs(v) > 1e9) syntax("'" + path(key) + "' expects an integer", e->line, e->value_column);
    return static_cast<int>(v);
  }

  std::optional<bool> boolean(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    syntax("'" + path(key) + "' expects true or false", e->line, e->value_column);
  }

  std::vector<double> numbers(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return {};
    std::vector<double> out;
    std::istringstream in(e->value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_number(key, Entry{trim(item), e->line, e->value_column}));
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        syntax("unknown key '" + path(key) + "'", e.line, 1);
      }
    }
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }
  void mark_used(const std::string& key) { used_.push_back(key); }

 private:
  std::string section_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> used_;
};

// Matches "name7", "name12" (single-digit indices) and "name[i][j]".
std::optional<std::vector<int>> indices(const std::string& key, const std::string& name, int arity) {
  if (key.rfind(name, 0) != 0) return std::nullopt;
  const std::string rest = key.substr(name.size());
  std::vector<int> out;
  if (!rest.empty() && rest.front() == '[') {
    static const std::regex bracket(R"(\[\s*(\d+)\s*\])");
    std::size_t consumed = 0;
    for (auto it = std::sregex_iterator(rest.begin(), rest.end(), bracket); it != std::sregex_iterator(); ++it) {
      if (static_cast<std::size_t>(it->position()) != consumed) return std::nullopt;
      out.push_back(std::stoi((*it)[1]));
      consumed += it->length();
    }
    if (consumed != rest.size()) return std::nullopt;
  } else {
    if (static_cast<int>(rest.size()) != arity) return std::nullopt;
    for (char c : rest) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      out.push_back(c - '0');
    }
  }
  if (static_cast<int>(out.size()) != arity) return std::nullopt;
  return out;
}

Expression parse_expression(const std::string& path, const Entry& e) {
  try {
    return Expression::parse(e.value);
  } catch (const ExpressionError& err) {
    const int col = e.value_column + err.column() - 1;
    syntax("'" + path + "': " + err.what(), e.line, col);
  }
}

}  // namespace

ProblemSpec build_problem(const ProblemSource& src, std::optional<int> nodes) {
  const int n = nodes.value_or(src.nodes);
  std::optional<Grid> grid;
  try {
    grid = src.kind == GridKind::Interval ? Grid::interval(src.size, n) : Grid::radial_ball(src.size, src.dimension, n);
  } catch (const Error& e) {
    semantic("grid", e.what());
  }
  std::optional<Decomposition> dec;
  try {
    dec.emplace(src.decomposition);
  } catch (const Error& e) {
    semantic("problem.decomposition", e.what());
  }
  const int d = src.components();
  if (dec->d() != d) semantic("problem.decomposition", "last boundary must equal the number of components");

  std::vector<Coefficient> potential;
  for (int i = 0; i < d; ++i) {
    const Expression ex = Expression::parse(src.potential[i]);
    potential.push_back(ex.is_constant() ? Coefficient::broadcast(*grid, ex(0.0)) : Coefficient::sampled(ex.sample(*grid)));
  }
  std::vector<std::vector<Coefficient>> coupling(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Expression ex = Expression::parse(src.coupling[i][j]);
      coupling[i].push_back(ex.is_constant() ? Coefficient::broadcast(*grid, ex(0.0))
                                             : Coefficient::sampled(ex.sample(*grid)));
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (coupling[i][j].values != coupling[j][i].values) {
        semantic("problem.beta" + std::to_string(j + 1) + std::to_string(i + 1),
                 "coupling is not symmetric (beta_ij != beta_ji at some node)");
      }
    }
  }
  std::vector<double> mu(d);
  for (int i = 0; i < d; ++i) mu[i] = src.mu[i] ? *src.mu[i] : coupling[i][i].min();

  ProblemSpec spec{*grid, *dec, std::move(potential), std::move(coupling), std::move(mu)};
  try {
    check_structure(spec);
  } catch (const Error& e) {
    semantic("problem", e.what());
  }
  return spec;
}

ProblemSpec with_coupling(const ProblemSpec& spec, int i, int j, double b) {
  ProblemSpec out = spec;
  out.coupling[i][j] = Coefficient::broadcast(spec.grid, b);
  out.coupling[j][i] = Coefficient::broadcast(spec.grid, b);
  return out;
}

RunConfig parse_config(const std::string& text) {
  const Table table = tokenize(text);

  Reader top(table, "");
  const int version = top.integer("format_version", kFormatVersion);
  if (version != kFormatVersion) {
    semantic("format_version", "unsupported version " + std::to_string(version), top.find("format_version")->line);
  }
  top.reject_unused();

  ProblemSource src;
  Reader grid(table, "grid");
  if (const Entry* e = grid.find("kind")) {
    if (e->value == "interval") {
      src.kind = GridKind::Interval;
    } else if (e->value == "radial") {
      src.kind = GridKind::RadialBall;
    } else {
      syntax("'grid.kind' must be interval or radial", e->line, e->value_column);
    }
  }
  src.size = grid.number("size", src.kind == GridKind::Interval ? 1.0 : 20.0);
  src.dimension = grid.integer("dimension", src.kind == GridKind::Interval ? 1 : 3);
  src.nodes = grid.integer("nodes", 200);
  if (src.kind == GridKind::Interval && src.dimension != 1) semantic("grid.dimension", "an interval has dimension 1");
  grid.reject_unused();

  Reader prob(table, "problem");
  const int d = prob.integer("components", 1);
  if (d < 1) semantic("problem.components", "must be at least 1");
  if (const Entry* e = prob.find("decomposition")) {
    for (double v : prob.numbers("decomposition")) {
      if (v != std::floor(v)) syntax("'problem.decomposition' expects integers", e->line, e->value_column);
      src.decomposition.push_back(static_cast<int>(v));
    }
  } else {
    for (int i = 0; i <= d; ++i) src.decomposition.push_back(i);
  }

  std::string default_potential = "0";
  if (const Entry* e = prob.find("V")) {
    parse_expression(prob.path("V"), *e);
    default_potential = e->value;
  }
  src.potential.assign(d, default_potential);
  src.coupling.assign(d, std::vector<std::string>(d, ""));
  src.mu.assign(d, std::nullopt);
  std::vector<std::vector<int>> coupling_line(d, std::vector<int>(d, 0));

  for (const auto& [key, entry] : prob.entries()) {
    if (key == "components" || key == "decomposition" || key == "V") continue;
    auto check_range = [&, &entry = entry, &key = key](int idx) {
      if (idx < 1 || idx > d) semantic(prob.path(key), "component index out of range 1.." + std::to_string(d), entry.line);
      return idx - 1;
    };
    if (auto ix = indices(key, "beta", 2)) {
      const int i = check_range((*ix)[0]);
      const int j = check_range((*ix)[1]);
      if (!src.coupling[i][j].empty()) semantic(prob.path(key), "coupling given twice", entry.line);
      parse_expression(prob.path(key), entry);
      src.coupling[i][j] = entry.value;
      coupling_line[i][j] = entry.line;
    } else if (auto iv = indices(key, "V", 1)) {
      const int i = check_range((*iv)[0]);
      parse_expression(prob.path(key), entry);
      src.potential[i] = entry.value;
    } else if (auto im = indices(key, "mu", 1)) {
      const int i = check_range((*im)[0]);
      src.mu[i] = prob.to_number(key, entry);
    } else {
      continue;
    }
    prob.mark_used(key);
  }
  prob.reject_unused();

  for (int i = 0; i < d; ++i) {
    if (src.coupling[i][i].empty()) semantic("problem.beta" + std::to_string(i + 1) + std::to_string(i + 1), "missing self-coupling");
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j || !src.coupling[i][j].empty()) continue;
      src.coupling[i][j] = src.coupling[j][i].empty() ? "0" : src.coupling[j][i];
    }
  }

  ProblemSpec problem = build_problem(src);

  SolverConfig solver;
  Reader sol(table, "solver");
  solver.max_iters = sol.integer("max_iters", solver.max_iters);
  solver.step0 = sol.number("step0", solver.step0);
  solver.armijo_c = sol.number("armijo_c", solver.armijo_c);
  solver.backtrack = sol.number("backtrack", solver.backtrack);
  solver.tol_tangent_grad = sol.number("tol_tangent_grad", solver.tol_tangent_grad);
  solver.tol_nehari = sol.number("tol_nehari", solver.tol_nehari);
  if (auto b = sol.boolean("enforce_nonneg")) solver.enforce_nonneg = *b;
  if (const Entry* e = sol.find("require_E")) {
    if (e->value == "true") {
      solver.require_E = true;
    } else if (e->value == "false") {
      solver.require_E = false;
    } else if (e->value != "auto") {
      syntax("'solver.require_E' expects true, false or auto", e->line, e->value_column);
    }
  }
  solver.restarts = sol.integer("restarts", solver.restarts);
  const int seed = sol.integer("seed", static_cast<int>(solver.rng_seed));
  if (seed < 0) semantic("solver.seed", "must be nonnegative");
  solver.rng_seed = static_cast<std::uint64_t>(seed);
  if (auto b = sol.boolean("parallel")) solver.parallel = *b;
  sol.reject_unused();
  try {
    check_config(solver);
  } catch (const Error& e) {
    semantic("solver", e.what());
  }

  std::optional<SweepSpec> sweep;
  if (table.count("sweep")) {
    Reader sw(table, "sweep");
    SweepSpec s;
    const Entry* param = sw.find("parameter");
    if (!param) semantic("sweep.parameter", "missing");
    const auto ij = indices(param->value, "beta", 2);
    if (!ij) syntax("'sweep.parameter' must look like beta[i][j]", param->line, param->value_column);
    s.i = (*ij)[0] - 1;
    s.j = (*ij)[1] - 1;
    if (s.i < 0 || s.i >= d || s.j < 0 || s.j >= d) semantic("sweep.parameter", "component index out of range", param->line);
    const auto& dec = problem.decomposition;
    if (dec.group_of(s.i) == dec.group_of(s.j)) {
      semantic("sweep.parameter", "only cross-group couplings (K_2 pairs) can be swept", param->line);
    }
    const bool has_list = sw.entries().count("values") > 0;
    const bool has_ladder = sw.entries().count("start") || sw.entries().count("ratio") || sw.entries().count("count");
    if (has_list && has_ladder) semantic("sweep", "give either values or start/ratio/count, not both");
    if (has_list) {
      s.values = sw.numbers("values");
    } else {
      const double start = sw.number("start", -1.0);
      const double ratio = sw.number("ratio", 10.0);
      const int count = sw.integer("count", 4);
      if (count < 1) semantic("sweep.count", "must be at least 1");
      for (int k = 0; k < count; ++k) s.values.push_back(start * std::pow(ratio, k));
    }
    if (s.values.empty()) semantic("sweep.values", "empty ladder");
    for (std::size_t k = 1; k < s.values.size(); ++k) {
      const bool up = s.values[1] > s.values[0];
      if (s.values[k] == s.values[k - 1] || (s.values[k] > s.values[k - 1]) != up) {
        semantic("sweep.values", "values must be strictly monotone");
      }
    }
    sw.reject_unused();
    sweep = std::move(s);
  }

  OutputSpec output;
  Reader out(table, "output");
  if (const Entry* e = out.find("directory")) output.directory = e->value;
  if (const Entry* e = out.find("formats")) {
    output.csv = output.json = output.svg = false;
    std::istringstream in(e->value);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (item == "csv") {
        output.csv = true;
      } else if (item == "json") {
        output.json = true;
      } else if (item == "svg") {
        output.svg = true;
      } else {
        syntax("'output.formats': unknown format '" + item + "'", e->line, e->value_column);
      }
    }
  }
  out.reject_unused();

  return RunConfig{version, std::move(src), std::move(problem), solver, std::move(sweep), std::move(output)};
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'", 0, 0, "");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace cnls::cli
