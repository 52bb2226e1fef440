#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "cnls/nehari.hpp"
#include "cnls/problem.hpp"

// Brute-force references for cross-validating the main code paths. These are slow on
// purpose and share nothing with the paths they check except grid quadrature.
namespace cnls::oracle {

/// Grid search for the maximum of 1/2 b.t - 1/4 M t.t over {0, T/n, ..., T}^m, refined
/// once on a window of +-1 coarse cell around the winner. m <= 3.
Eigen::VectorXd brute_force_psi_max(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, double T, int n_grid);

/// Central-difference L^2 gradient of `energy` (nodal derivative divided by the quadrature weight).
State fd_gradient(const ProblemSpec& spec, const State& u, double eps);

/// (J(u + eps v) + J(u - eps v) - 2 J(u)) / eps^2.
double fd_second(const ProblemSpec& spec, const State& u, const State& v, double eps);

/// Smallest eigenvalue by cyclic Jacobi rotations. m <= 16; throws on asymmetry above 1e-10.
double eig_min_sym(const Eigen::MatrixXd& M);

struct GroundStateReference {
  double energy = 0.0;
  State state;
  int feasible_restarts = 0;
};

struct ReferenceOptions {
  int restarts = 200;
  int max_iters = 4000;
  std::uint64_t seed = 12345;
  bool require_E = true;
};

/// Reference minimizer of J over N_B (cap E_B when require_E) for tiny grids (n <= 24,
/// d <= 3): plain gradient descent with backtracking on the reduced functional
/// u -> 1/4 b(u).M(u)^{-1} b(u) from many seeded random starts; returns the best point
/// rescaled onto N_B. Uses its own dense assembly of the Dirichlet form.
GroundStateReference small_instance_ground_state(const ProblemSpec& spec, const ReferenceOptions& options = {});

}  // namespace cnls::oracle
