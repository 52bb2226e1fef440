#include "cnls/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "cnls/errors.hpp"

namespace cnls {

namespace {

constexpr double kMaxStep = 1024.0;
constexpr int kMaxBacktracks = 60;
constexpr int kInitialAttempts = 10;
constexpr double kTieTolerance = 1e-10;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t attempt, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(attempt), static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

// Basis profile of the given mode: sin(k pi x / L) on an interval, cos((k - 1/2) pi r / R)
// on a ball (even at the centre, zero at r = R).
double profile(const Grid& g, int mode, double x) {
  if (g.kind() == GridKind::Interval) return std::sin(mode * std::numbers::pi * x / g.size());
  return std::cos((mode - 0.5) * std::numbers::pi * x / g.size());
}

State segregated_bumps(const ProblemSpec& spec, std::mt19937_64& rng) {
  const int d = spec.d();
  const int n = spec.grid.n_interior();
  if (n < 2 * d) throw ProjectionError("initial_guess: grid too coarse for segregated bumps");
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  std::uniform_real_distribution<double> amplitude(0.5, 1.5);

  // Window boundaries: d equal chunks with jittered interior cut points.
  std::vector<int> cuts(d + 1);
  cuts[0] = 0;
  cuts[d] = n;
  for (int w = 1; w < d; ++w) {
    const double pos = (w + jitter(rng)) * n / static_cast<double>(d);
    cuts[w] = std::clamp(static_cast<int>(std::lround(pos)), cuts[w - 1] + 2, n - 2 * (d - w));
  }
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  State u = State::zeros(spec);
  for (int i = 0; i < d; ++i) {
    const int lo = cuts[order[i]];
    const int hi = cuts[order[i] + 1];
    const int width = hi - lo;
    const double a = amplitude(rng);
    const bool touches_centre = spec.grid.kind() == GridKind::RadialBall && lo == 0;
    for (int k = lo; k < hi; ++k) {
      double s;
      if (touches_centre) {
        s = std::cos(0.5 * std::numbers::pi * (k + 1) / (width + 1));
      } else {
        s = std::sin(std::numbers::pi * (k - lo + 1) / (width + 1));
      }
      u[i][k] = a * s * s;
    }
  }
  return u;
}

// Later attempts damp the random field outside a segregated layout so that strongly
// competing components stop overlapping and the projection exists.
State random_positive(const ProblemSpec& spec, std::mt19937_64& rng, int attempt) {
  std::uniform_real_distribution<double> lead(0.5, 1.5);
  std::uniform_real_distribution<double> other(-0.5, 0.5);
  const Grid& g = spec.grid;
  State u = State::zeros(spec);
  for (int i = 0; i < spec.d(); ++i) {
    for (int mode = 1; mode <= 6; ++mode) {
      const double a = (mode == 1 ? lead(rng) : other(rng)) / mode;
      for (int k = 0; k < g.n_interior(); ++k) u[i][k] += a * profile(g, mode, g.nodes()[k]);
    }
    u[i] = u[i].cwiseAbs();
  }
  if (attempt > 0) {
    const State mask = segregated_bumps(spec, rng);
    const double floor = std::pow(4.0, -attempt);
    for (int i = 0; i < spec.d(); ++i) {
      u[i] = (u[i].array() * (mask[i].array() + floor * mask[i].maxCoeff())).matrix();
    }
  }
  return u;
}

// Zero-order term of the gradient metric: V_i^+ plus the competitive part of the
// linearized coupling, sum_j beta_ij^- u_j^2. Both are nonnegative.
std::vector<Field> preconditioner_potentials(const ProblemSpec& spec, const State& u) {
  std::vector<Field> out;
  for (int i = 0; i < spec.d(); ++i) {
    Field p = spec.V(i).cwiseMax(0.0);
    for (int j = 0; j < spec.d(); ++j) p += (-spec.beta(i, j)).cwiseMax(0.0).cwiseProduct(u[j].cwiseAbs2());
    out.push_back(std::move(p));
  }
  return out;
}

struct Direction {
  State grad;      // L^2 gradient
  State descent;   // tangent-projected negative H gradient
  double slope = 0.0;
  double tangent_norm = 0.0;
};

Direction descent_direction(const ProblemSpec& spec, const State& u) {
  const std::vector<Field> precond = preconditioner_potentials(spec, u);
  Direction dir;
  dir.grad = gradient(spec, u);
  State hgrad = dir.grad;
  for (int i = 0; i < spec.d(); ++i) hgrad[i] = -solve_shifted_laplacian(spec.grid, precond[i], dir.grad[i]);
  dir.descent = tangent_project(spec, u, hgrad);
  dir.slope = directional_derivative(spec, dir.grad, dir.descent);
  const double un = h_norm(spec, u);
  dir.tangent_norm = un > 0.0 ? h_norm(spec, dir.descent) / un : std::numeric_limits<double>::infinity();
  return dir;
}

}  // namespace

void check_config(const SolverConfig& c) {
  if (c.max_iters < 0) throw ProblemError("solver: max_iters must be nonnegative");
  if (!(c.step0 > 0.0)) throw ProblemError("solver: step0 must be positive");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 1.0)) throw ProblemError("solver: armijo_c must lie in (0, 1)");
  if (!(c.backtrack > 0.0 && c.backtrack < 1.0)) throw ProblemError("solver: backtrack must lie in (0, 1)");
  if (!(c.tol_tangent_grad > 0.0) || !(c.tol_nehari > 0.0)) throw ProblemError("solver: tolerances must be positive");
  if (c.restarts < 1) throw ProblemError("solver: restarts must be at least 1");
}

bool resolve_require_E(const ProblemSpec& spec, const SolverConfig& config) {
  if (config.require_E) return *config.require_E;
  return !validate(spec).pure_competition_K2;
}

double h_norm(const ProblemSpec& spec, const State& u) {
  double s = 0.0;
  for (int i = 0; i < spec.d(); ++i) s += inner_h1(spec.grid, u[i], u[i], spec.V(i));
  return std::sqrt(std::max(0.0, s));
}

double l2_norm(const ProblemSpec& spec, const State& u) {
  double s = 0.0;
  for (int i = 0; i < u.d(); ++i) s += integrate(spec.grid, u[i].cwiseProduct(u[i]));
  return std::sqrt(std::max(0.0, s));
}

State initial_guess(const ProblemSpec& spec, std::uint64_t seed, InitialStyle style, const std::optional<State>& warm) {
  if (style == InitialStyle::Warm) {
    if (!warm) throw ProblemError("initial_guess: warm style needs a state");
    return project_to_nehari(spec, *warm);
  }
  std::string last_error;
  for (int attempt = 0; attempt < kInitialAttempts; ++attempt) {
    auto rng = make_rng(seed, attempt, style == InitialStyle::SegregatedBumps ? 1 : 2);
    const State raw = style == InitialStyle::SegregatedBumps ? segregated_bumps(spec, rng) : random_positive(spec, rng, attempt);
    try {
      return project_to_nehari(spec, raw);
    } catch (const ProjectionError& e) {
      last_error = e.what();
    }
  }
  throw ProjectionError("initial_guess: no projectable start after retries (" + last_error + ")");
}

Eigen::VectorXd lagrange_multipliers(const ProblemSpec& spec, const State& u) {
  const Eigen::MatrixXd M = interaction_matrix(spec, u).entries;
  const State g = gradient(spec, u);
  Eigen::VectorXd r(spec.m());
  for (int h = 0; h < spec.m(); ++h) r[h] = -0.5 * directional_derivative(spec, g, group_direction(spec, u, h));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  if (!(lu.rcond() > 1e-13)) throw NotInEError("lagrange_multipliers: interaction matrix is singular");
  return lu.solve(r);
}

void fill_diagnostics(const ProblemSpec& spec, SolverResult& result) {
  const State& u = result.state;
  result.energy = energy(spec, u);
  result.nehari_residual = relative_nehari_residual(spec, u);
  const EMembership e = is_in_E(spec, u);
  result.in_E = e.inside;
  result.margins = e.margins;
  try {
    result.multiplier_norm = lagrange_multipliers(spec, u).norm();
  } catch (const NotInEError&) {
    result.multiplier_norm = std::numeric_limits<double>::infinity();
  }
  result.component_l4.clear();
  for (int i = 0; i < spec.d(); ++i) result.component_l4.push_back(norm_l4_sq(spec.grid, u[i]));
  const double un = l2_norm(spec, u);
  result.free_grad_norm = un > 0.0 ? l2_norm(spec, gradient(spec, u)) / un : std::numeric_limits<double>::infinity();
  try {
    result.tangent_grad_norm = descent_direction(spec, u).tangent_norm;
  } catch (const NotInEError&) {
    result.tangent_grad_norm = std::numeric_limits<double>::infinity();
  }
}

SolverResult minimize(const ProblemSpec& spec, const SolverConfig& config, const State& u0) {
  check_config(config);
  const bool require_E = resolve_require_E(spec, config);

  SolverResult result;
  State u = project_to_nehari(spec, config.enforce_nonneg ? abs(u0) : u0);
  if (require_E && !is_in_E(spec, u).inside) throw ProjectionError("minimize: starting point is not in E_B");
  double J = energy(spec, u);
  double last_step = 0.5 * config.step0;
  double cap = kMaxStep;

  int it = 0;
  for (;; ++it) {
    Direction dir;
    try {
      dir = descent_direction(spec, u);
    } catch (const NotInEError&) {
      result.stop_reason = "singular constraint system";
      break;
    }
    const double residual = relative_nehari_residual(spec, u);
    if (dir.tangent_norm <= config.tol_tangent_grad && residual <= config.tol_nehari) {
      result.converged = true;
      result.stop_reason = "tolerances met";
      break;
    }
    if (it >= config.max_iters) {
      result.stop_reason = "max_iters reached";
      break;
    }
    if (!(dir.slope < 0.0)) {
      result.stop_reason = "no descent direction";
      break;
    }

    double step = std::min(cap, 2.0 * last_step);
    bool accepted = false;
    State next;
    double J_next = J;
    for (int bt = 0; bt < kMaxBacktracks && !accepted; ++bt, step = std::min(step * config.backtrack, cap)) {
      State trial = u;
      for (int i = 0; i < spec.d(); ++i) trial[i] += step * dir.descent[i];
      if (config.enforce_nonneg) trial = abs(std::move(trial));
      try {
        trial = project_to_nehari(spec, trial);
      } catch (const ProjectionError&) {
        continue;
      }
      if (require_E && !is_in_E(spec, trial).inside) {
        cap = 0.5 * std::min(cap, step);
        continue;
      }
      const double J_trial = energy(spec, trial);
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(J);
      if (J_trial <= J + config.armijo_c * step * dir.slope + slack) {
        accepted = true;
        next = std::move(trial);
        J_next = J_trial;
        last_step = step;
      }
    }
    if (!accepted) {
      result.stop_reason = "line search stagnation";
      break;
    }
    u = std::move(next);
    J = J_next;
    result.history.push_back({J, relative_nehari_residual(spec, u), dir.tangent_norm, last_step});
  }

  result.iterations = it;
  result.state = std::move(u);
  fill_diagnostics(spec, result);
  result.converged = result.converged && result.tangent_grad_norm <= config.tol_tangent_grad &&
                     result.nehari_residual <= config.tol_nehari && (!require_E || result.in_E);
  return result;
}

SolverResult multi_start(const ProblemSpec& spec, const SolverConfig& config) {
  check_config(config);
  struct Outcome {
    std::optional<SolverResult> result;
    std::string error;
  };
  auto run = [&spec, &config](int r) {
    Outcome out;
    const std::uint64_t seed = config.rng_seed + static_cast<std::uint64_t>(r);
    const InitialStyle style = r % 2 == 0 ? InitialStyle::SegregatedBumps : InitialStyle::RandomPositive;
    try {
      SolverResult res = minimize(spec, config, initial_guess(spec, seed, style));
      res.seed = seed;
      out.result = std::move(res);
    } catch (const Error& e) {
      out.error = e.what();
    }
    return out;
  };

  std::vector<Outcome> outcomes(config.restarts);
  if (config.parallel && config.restarts > 1) {
    std::vector<std::future<Outcome>> futures;
    for (int r = 0; r < config.restarts; ++r) futures.push_back(std::async(std::launch::async, run, r));
    for (int r = 0; r < config.restarts; ++r) outcomes[r] = futures[r].get();
  } else {
    for (int r = 0; r < config.restarts; ++r) outcomes[r] = run(r);
  }

  int best = -1;
  for (int r = 0; r < config.restarts; ++r) {
    const auto& cand = outcomes[r].result;
    if (!cand || !cand->converged) continue;
    if (best < 0) {
      best = r;
      continue;
    }
    const SolverResult& inc = *outcomes[best].result;
    const double scale = std::max(std::abs(inc.energy), std::abs(cand->energy));
    const double gap = cand->energy - inc.energy;
    if (gap < -kTieTolerance * scale) {
      best = r;
    } else if (std::abs(gap) <= kTieTolerance * scale && cand->tangent_grad_norm < inc.tangent_grad_norm) {
      best = r;
    }
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "multi_start: no restart converged";
    for (int r = 0; r < config.restarts; ++r) {
      msg << "\n  seed " << config.rng_seed + r << ": ";
      if (outcomes[r].result) {
        const auto& res = *outcomes[r].result;
        msg << res.stop_reason << " (energy " << res.energy << ", tangent grad " << res.tangent_grad_norm
            << ", residual " << res.nehari_residual << ")";
      } else {
        msg << outcomes[r].error;
      }
    }
    throw ConvergenceError(msg.str());
  }
  return std::move(*outcomes[best].result);
}

}  // namespace cnls
