#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cnls/nehari.hpp"
#include "cnls/problem.hpp"

namespace cnls {

struct SolverConfig {
  int max_iters = 5000;
  double step0 = 0.1;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double tol_tangent_grad = 1e-7;  // relative to ||u||_H
  double tol_nehari = 1e-10;
  bool enforce_nonneg = true;
  /// Unset: require E_B unless the K_2 couplings are purely competitive.
  std::optional<bool> require_E;
  int restarts = 8;
  std::uint64_t rng_seed = 1;
  /// Run the restarts of multi_start concurrently.
  bool parallel = false;
};

/// Throws ProblemError on nonpositive tolerances or steps.
void check_config(const SolverConfig& config);

/// require_E as it will be used for this problem.
bool resolve_require_E(const ProblemSpec& spec, const SolverConfig& config);

struct IterationRecord {
  double energy = 0.0;
  double nehari_residual = 0.0;
  double tangent_grad_norm = 0.0;
  double step = 0.0;
};

struct SolverResult {
  State state;
  double energy = 0.0;
  int iterations = 0;
  double tangent_grad_norm = 0.0;   // ||v||_H / ||u||_H, v the projected descent direction
  double free_grad_norm = 0.0;      // ||gradient(u)||_{L2} / ||u||_{L2}
  double nehari_residual = 0.0;     // max_h |G_h| / ||u_h||^2
  bool in_E = false;
  Eigen::VectorXd margins;
  double multiplier_norm = 0.0;
  std::vector<double> component_l4;  // |u_i|_4^2
  bool converged = false;
  std::string stop_reason;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> history;
};

enum class InitialStyle { SegregatedBumps, RandomPositive, Warm };

/// Seeded starting point projected onto N_B. Segregated bumps sit on pairwise disjoint node
/// windows so the interaction matrix is diagonal; random positive draws smooth positive
/// noise; warm reuses `warm`. Projection failures are retried with fresh draws before a
/// ProjectionError is raised.
State initial_guess(const ProblemSpec& spec, std::uint64_t seed, InitialStyle style,
                    const std::optional<State>& warm = std::nullopt);

/// Tangent-projected gradient descent on N_B (and E_B when required) with Nehari
/// re-projection after every step. The descent direction uses the H = (H^1_0)^d gradient
/// (the L^2 gradient mapped through (-Delta + V_i)^{-1}), which makes the iteration
/// mesh independent.
SolverResult minimize(const ProblemSpec& spec, const SolverConfig& config, const State& u0);

/// Lowest-energy converged result over `restarts` seeded runs. Ties (relative energy gap
/// below 1e-10) go to the smaller tangent gradient norm, then to the earlier seed.
/// Throws ConvergenceError carrying per-restart diagnostics if no run converged.
SolverResult multi_start(const ProblemSpec& spec, const SolverConfig& config);

/// Solves M mu = r with r_h = -1/2 <grad J(u), e_h>, e_h the group directions. Vanishes at a
/// constrained critical point in N_B cap E_B. Throws NotInEError when M is singular.
Eigen::VectorXd lagrange_multipliers(const ProblemSpec& spec, const State& u);

/// ||u||_H = (sum_i <u_i, u_i>_{V_i})^{1/2}.
double h_norm(const ProblemSpec& spec, const State& u);
/// Discrete L^2 norm (angular factor included).
double l2_norm(const ProblemSpec& spec, const State& u);

/// Fills the diagnostic fields of a result for state u (energy, residuals, E margins,
/// multipliers, component norms, free gradient).
void fill_diagnostics(const ProblemSpec& spec, SolverResult& result);

}  // namespace cnls
