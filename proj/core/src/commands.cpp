#include "cnls/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cnls/analysis.hpp"
#include "cnls/errors.hpp"
#include "cnls/oracle.hpp"

namespace cnls::cli {

namespace {

constexpr double kWarmSlack = 1e-8;

std::string output_dir(const RunConfig& config, const CommandOptions& options) {
  std::string dir = options.out_dir.empty() ? config.output.directory : options.out_dir;
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

void print_items(const std::vector<CheckItem>& items, std::ostream& log) {
  char line[160];
  std::snprintf(line, sizeof line, "%-34s %-14s %-14s %s\n", "check", "value", "tolerance", "result");
  log << line;
  for (const auto& it : items) {
    std::snprintf(line, sizeof line, "%-34s %-14s %-14s %s\n", it.name.c_str(), fmt(it.value).c_str(),
                  it.informational ? "-" : fmt(it.tolerance).c_str(),
                  it.informational ? "info" : (it.pass ? "PASS" : "FAIL"));
    log << line;
  }
}

bool all_pass(const std::vector<CheckItem>& items) {
  return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.informational || c.pass; });
}

nlohmann::json items_json(const std::vector<CheckItem>& items) {
  auto out = nlohmann::json::array();
  for (const auto& it : items) {
    out.push_back({{"name", it.name},
                   {"value", std::isfinite(it.value) ? nlohmann::json(it.value) : nlohmann::json(nullptr)},
                   {"tolerance", it.tolerance},
                   {"pass", it.pass},
                   {"informational", it.informational}});
  }
  return out;
}

CheckItem upper(std::string name, double value, double tol) { return {std::move(name), value, tol, value <= tol, false}; }

}  // namespace

RunConfig apply_overrides(RunConfig config, const CommandOptions& options) {
  if (options.seed) config.solver.rng_seed = *options.seed;
  if (options.grid) {
    config.source.nodes = *options.grid;
    config.problem = build_problem(config.source);
  }
  return config;
}

int cmd_solve(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const ProblemSpec& spec = config.problem;
  const std::string dir = output_dir(config, options);
  SolverResult result;
  try {
    result = multi_start(spec, config.solver);
  } catch (const ConvergenceError& e) {
    log << e.what() << "\n";
    return kExitConvergence;
  }
  const BoundsReport bounds = bounds_report(spec, result.state);
  const HypothesisReport hyp = validate(spec);

  if (config.output.csv) write_fields_csv(join(dir, "fields.csv"), spec.grid, result.state);
  if (config.output.json) write_text(join(dir, "report.json"), solve_report_json(spec, result, bounds, hyp));
  if (config.output.svg) write_text(join(dir, "components.svg"), components_svg(spec.grid, result.state));

  log << "energy " << fmt(result.energy) << "  iterations " << result.iterations << "  seed " << result.seed << "\n";
  log << "nehari residual " << fmt(result.nehari_residual) << "  tangent grad " << fmt(result.tangent_grad_norm)
      << "  in E " << (result.in_E ? "yes" : "no") << "\n";

  const double sum_b = bounds.total_h1;
  const bool ok = bounds.valid && bounds.energy_identity_gap <= 1e-10 * std::abs(result.energy) &&
                  bounds.mass_inequality_holds && result.multiplier_norm <= 1e-5 * sum_b;
  if (!ok) {
    log << "invariant violation in the converged state\n";
    return kExitInvariant;
  }
  return kExitOk;
}

SweepOutcome run_sweep(const RunConfig& config, bool parallel_fresh) {
  if (!config.sweep) throw ProblemError("sweep: config has no [sweep] section");
  const SweepSpec& sw = *config.sweep;
  std::vector<double> values = sw.values;
  std::stable_sort(values.begin(), values.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });

  std::vector<ProblemSpec> specs;
  for (double b : values) specs.push_back(with_coupling(config.problem, sw.i, sw.j, b));

  auto fresh = [&config](const ProblemSpec& spec) -> std::optional<SolverResult> {
    try {
      return multi_start(spec, config.solver);
    } catch (const ConvergenceError&) {
      return std::nullopt;
    }
  };

  std::vector<std::optional<SolverResult>> baseline(values.size());
  if (parallel_fresh) {
    std::vector<std::future<std::optional<SolverResult>>> futures;
    for (const auto& spec : specs) futures.push_back(std::async(std::launch::async, fresh, std::cref(spec)));
    for (std::size_t k = 0; k < values.size(); ++k) baseline[k] = futures[k].get();
  } else {
    for (std::size_t k = 0; k < values.size(); ++k) baseline[k] = fresh(specs[k]);
  }

  SweepOutcome out;
  std::optional<State> previous;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const ProblemSpec& spec = specs[k];
    std::optional<SolverResult> warm;
    if (!parallel_fresh && previous) {
      try {
        SolverResult r = minimize(spec, config.solver, initial_guess(spec, config.solver.rng_seed, InitialStyle::Warm, previous));
        if (r.converged) warm = std::move(r);
      } catch (const Error&) {
      }
    }
    const double base = baseline[k] ? baseline[k]->energy : std::numeric_limits<double>::infinity();
    SweepRow row;
    row.baseline_energy = base;
    const SolverResult* chosen = nullptr;
    if (warm && warm->energy <= base + kWarmSlack) {
      chosen = &*warm;
      row.warm = true;
    } else if (baseline[k]) {
      chosen = &*baseline[k];
      row.warm = false;
      if (previous && !parallel_fresh) ++out.fallbacks;
    } else {
      throw ConvergenceError("sweep: no converged solve at b = " + fmt(values[k]));
    }
    row.record = segregation_record(spec, chosen->state, values[k]);
    previous = chosen->state;
    out.table.push_back(std::move(row));
    out.states.push_back(chosen->state);
  }
  return out;
}

int cmd_sweep(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  if (!config.sweep) {
    log << "config: sweep: missing [sweep] section\n";
    return kExitConfig;
  }
  const std::string dir = output_dir(config, options);
  SweepOutcome out;
  try {
    out = run_sweep(config, options.parallel_fresh);
  } catch (const ConvergenceError& e) {
    log << e.what() << "\n";
    return kExitConvergence;
  }
  if (config.output.csv) {
    write_text(join(dir, "sweep.csv"), sweep_csv(out.table));
    for (std::size_t k = 0; k < out.states.size(); ++k) {
      write_fields_csv(join(dir, "fields_" + std::to_string(k) + ".csv"), config.problem.grid, out.states[k]);
    }
  }
  if (config.output.json) write_text(join(dir, "sweep.json"), sweep_report_json(out.table, out.fallbacks));
  if (config.output.svg) write_text(join(dir, "sweep.svg"), overlap_svg(out.table));

  bool ok = true;
  for (const auto& row : out.table) {
    const auto& r = row.record;
    log << "b " << fmt(r.b) << "  energy " << fmt(r.energy) << "  competitive mass " << fmt(r.competitive_mass)
        << "  max limit residual " << fmt(r.max_relative_limit_residual) << (row.warm ? "" : "  (fresh)") << "\n";
    if (r.energy > row.baseline_energy + kWarmSlack) ok = false;
  }
  log << "fresh fallbacks " << out.fallbacks << "\n";
  return ok ? kExitOk : kExitInvariant;
}

std::vector<CheckItem> invariant_battery(const ProblemSpec& spec, const SolverConfig& solver, const State& u) {
  std::vector<CheckItem> items;
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  if (!(b.array() > 0.0).all()) {
    items.push_back({"group_norms_positive", b.minCoeff(), 0.0, false, false});
    return items;
  }
  SolverResult diag;
  diag.state = u;
  fill_diagnostics(spec, diag);
  const BoundsReport bounds = bounds_report(spec, u);

  items.push_back(upper("nehari_residual", diag.nehari_residual, 1e-8));
  items.push_back(upper("energy_identity_gap_rel", bounds.energy_identity_gap / std::abs(diag.energy), 1e-10));
  items.push_back(upper("competitive_minus_cooperative", bounds.competitive_mass - bounds.cooperative_mass, 0.0));
  items.push_back({"sobolev_gap_min", bounds.sobolev_gap.minCoeff(), -1e-9, bounds.sobolev_inequality_holds, false});
  if (resolve_require_E(spec, solver)) {
    items.push_back({"E_margin_min", diag.margins.minCoeff(), 0.0, diag.in_E, false});
  } else {
    items.push_back({"E_margin_min", diag.margins.minCoeff(), 0.0, true, true});
  }
  if (diag.in_E) {
    const double lmin = oracle::eig_min_sym(interaction_matrix(spec, u).entries);
    items.push_back({"gershgorin_lambda_min", lmin, 0.0, lmin > 0.0, false});
  }
  items.push_back(upper("multiplier_norm_rel", diag.multiplier_norm / b.sum(), 1e-5));
  items.push_back(upper("free_gradient_rel", diag.free_grad_norm, 1e-4));

  const auto& dec = spec.decomposition;
  double largest = 0.0;
  for (double l4 : diag.component_l4) largest = std::max(largest, l4);
  for (int i = 0; i < spec.d(); ++i) {
    if (diag.component_l4[i] > kZeroComponentThreshold * largest) continue;
    int donor = -1;
    for (int j = dec.group_begin(dec.group_of(i)); j < dec.group_end(dec.group_of(i)); ++j) {
      if (j != i && (donor < 0 || diag.component_l4[j] > diag.component_l4[donor])) donor = j;
    }
    if (donor < 0 || diag.component_l4[donor] <= kZeroComponentThreshold * largest) continue;
    const SecondVariation sv = second_variation_test(spec, u, i, donor);
    const std::string tag = std::to_string(i + 1) + "_from_" + std::to_string(donor + 1);
    items.push_back({"second_variation_" + tag, sv.value, 0.0, true, true});
    items.push_back(upper("tangency_residual_" + tag, sv.max_tangency_residual, 1e-8));
  }
  return items;
}

int cmd_check(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const ProblemSpec& spec = config.problem;
  const HypothesisReport hyp = validate(spec);
  const auto nonexistence = detect_nonexistence(spec);
  log << "h0 " << (hyp.h0_ok ? "ok" : "violated") << "  h1 " << (hyp.h1_ok ? "ok" : "violated")
      << "  pure competition on K2 " << (hyp.pure_competition_K2 ? "yes" : "no") << "  max beta+ on K2 "
      << fmt(hyp.max_pos_part_K2) << "\n";
  for (auto [i, j] : nonexistence) {
    log << "no positive solution: pair (" << i + 1 << "," << j + 1 << ") satisfies the domination condition\n";
  }

  nlohmann::ordered_json report;
  report["format_version"] = kFormatVersion;
  report["h0_ok"] = hyp.h0_ok;
  report["h1_ok"] = hyp.h1_ok;
  auto ne = nlohmann::json::array();
  for (auto [i, j] : nonexistence) ne.push_back({i + 1, j + 1});
  report["nonexistence_pairs"] = ne;

  bool ok = hyp.h0_ok;
  if (options.solution) {
    LoadedFields loaded;
    try {
      loaded = read_fields_csv(*options.solution);
    } catch (const Error& e) {
      log << "solution: " << e.what() << "\n";
      return kExitConfig;
    }
    if (loaded.state.d() != spec.d() || loaded.nodes.size() != spec.grid.n_interior() ||
        (loaded.nodes - spec.grid.nodes()).cwiseAbs().maxCoeff() > 1e-12 * spec.grid.size()) {
      log << "solution: fields do not match the configured grid or component count\n";
      return kExitConfig;
    }
    const auto items = invariant_battery(spec, config.solver, loaded.state);
    print_items(items, log);
    report["battery"] = items_json(items);
    ok = ok && all_pass(items);
  }
  const std::string dir = output_dir(config, options);
  if (config.output.json) write_text(join(dir, "check.json"), report.dump(2) + "\n");
  return ok ? kExitOk : kExitInvariant;
}

std::vector<CheckItem> oracle_battery(const RunConfig& config, std::optional<int> nodes) {
  const ProblemSpec spec = build_problem(config.source, nodes.value_or(20));
  const std::uint64_t seed = config.solver.rng_seed;
  std::vector<CheckItem> items;

  // Group-rescaled start so that t = 1 is not already the maximizer.
  State u = initial_guess(spec, seed, InitialStyle::SegregatedBumps);
  for (int i = 0; i < spec.d(); ++i) u[i] *= 1.0 + 0.25 * i;

  if (spec.m() <= 3) {
    const PsiMaximum pm = maximize_psi(spec, u);
    if (pm.status != PsiStatus::Unbounded) {
      const Eigen::MatrixXd M = interaction_matrix(spec, u).entries;
      const Eigen::VectorXd b = group_norms_sq(spec, u);
      const double T = 2.0 * pm.t.maxCoeff() + 1.0;
      const Eigen::VectorXd tb = oracle::brute_force_psi_max(M, b, T, spec.m() == 3 ? 120 : 400);
      items.push_back(upper("psi_max_vs_brute_force", (tb - pm.t).cwiseAbs().maxCoeff(), 1e-3));
    }
  }

  const State g = gradient(spec, u);
  const State gfd = oracle::fd_gradient(spec, u, 1e-6);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < spec.d(); ++i) {
    num += (g[i] - gfd[i]).squaredNorm();
    den += g[i].squaredNorm();
  }
  items.push_back(upper("gradient_vs_finite_difference", std::sqrt(num / std::max(den, 1e-300)), 1e-5));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  State v = State::zeros(spec);
  for (int i = 0; i < spec.d(); ++i)
    for (int k = 0; k < spec.grid.n_interior(); ++k) v[i][k] = unit(rng);
  const double d2 = second_differential(spec, u, v);
  const double d2fd = oracle::fd_second(spec, u, v, 1e-4);
  items.push_back(upper("second_differential_vs_fd", std::abs(d2 - d2fd) / std::max(std::abs(d2), 1e-300), 1e-5));

  std::optional<SolverResult> solved;
  try {
    solved = multi_start(spec, config.solver);
  } catch (const ConvergenceError&) {
    items.push_back({"solver_converged", 0.0, 0.0, false, false});
  }
  if (solved) {
    if (solved->in_E) {
      const double lmin = oracle::eig_min_sym(interaction_matrix(spec, solved->state).entries);
      items.push_back({"gershgorin_lambda_min", lmin, 0.0, lmin > 0.0, false});
    }
    if (spec.grid.n_interior() <= 24 && spec.d() <= 3) {
      oracle::ReferenceOptions ro;
      ro.seed = seed;
      ro.require_E = resolve_require_E(spec, config.solver);
      const auto ref = oracle::small_instance_ground_state(spec, ro);
      const double rel = std::abs(solved->energy - ref.energy) / std::abs(ref.energy);
      items.push_back(upper("energy_vs_reference_minimizer", rel, 1e-4));
    }
  }
  return items;
}

int cmd_oracle(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  std::vector<CheckItem> items;
  try {
    items = oracle_battery(config, options.grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    log << "oracle: " << e.what() << "\n";
    return kExitConvergence;
  }
  print_items(items, log);
  const std::string dir = output_dir(config, options);
  if (config.output.json) {
    nlohmann::ordered_json report;
    report["format_version"] = kFormatVersion;
    report["checks"] = items_json(items);
    write_text(join(dir, "oracle.json"), report.dump(2) + "\n");
  }
  return all_pass(items) ? kExitOk : kExitInvariant;
}

int run_command(const std::string& command, const std::string& config_path, const CommandOptions& options,
                std::ostream& log) {
  try {
    CommandOptions local = options;
    RunConfig config = load_config(config_path);
    if (command == "oracle") {
      // --grid selects the reduced oracle grid, not the production one.
      local.grid.reset();
      config = apply_overrides(std::move(config), local);
      return cmd_oracle(config, options, log);
    }
    config = apply_overrides(std::move(config), local);
    if (command == "solve") return cmd_solve(config, local, log);
    if (command == "sweep") return cmd_sweep(config, local, log);
    if (command == "check") return cmd_check(config, local, log);
    log << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace cnls::cli
