#include <cmath>

#include <gtest/gtest.h>

#include "cnls/errors.hpp"
#include "cnls/oracle.hpp"
#include "cnls/solver.hpp"

using namespace cnls;

namespace {

ProblemSpec scalar(const Grid& g) { return make_constant_problem(g, Decomposition::singletons(1), {1}, {{1}}); }

ProblemSpec competing(const Grid& g, double b) {
  return make_constant_problem(g, Decomposition::singletons(2), {1, 1}, {{1, b}, {b, 1}});
}

}  // namespace

TEST(InitialGuess, SegregatedBumpsGiveDiagonalMatrix) {
  const Grid g = Grid::interval(6.0, 120);
  const ProblemSpec s = make_constant_problem(g, Decomposition::singletons(3), {1, 1, 1},
                                              {{1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}});
  const State u = initial_guess(s, 42, InitialStyle::SegregatedBumps);
  const Eigen::MatrixXd M = interaction_matrix(s, u).entries;
  EXPECT_EQ((M - Eigen::MatrixXd(M.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(is_in_E(s, u).inside);
  EXPECT_LE(relative_nehari_residual(s, u), 1e-10);
}

TEST(InitialGuess, DeterministicPerSeed) {
  const ProblemSpec s = competing(Grid::interval(6.0, 80), -3.0);
  for (auto style : {InitialStyle::SegregatedBumps, InitialStyle::RandomPositive}) {
    const State a = initial_guess(s, 9, style);
    const State b = initial_guess(s, 9, style);
    const State c = initial_guess(s, 10, style);
    for (int i = 0; i < 2; ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(a[0], c[0]);
    EXPECT_LE(relative_nehari_residual(s, a), 1e-10);
  }
  EXPECT_THROW(initial_guess(s, 1, InitialStyle::Warm), ProblemError);
}

TEST(Minimize, ScalarGroundStateOnALongInterval) {
  // On the line the ground state is sqrt(2) sech(x) with energy 4/3; [0, 20] truncates it
  // by O(e^{-20}) and the grid adds O(h^2).
  const ProblemSpec s = scalar(Grid::interval(20.0, 400));
  SolverConfig c;
  const SolverResult r = minimize(s, c, initial_guess(s, 1, InitialStyle::RandomPositive));
  ASSERT_TRUE(r.converged) << r.stop_reason;
  EXPECT_LE(r.multiplier_norm, 1e-6 * group_norms_sq(s, r.state).sum());
  EXPECT_LE(std::abs(directional_derivative(s, gradient(s, r.state), r.state)), 1e-8 * group_norms_sq(s, r.state)[0]);
  EXPECT_NEAR(r.energy, 4.0 / 3.0, 2e-3);
}

TEST(Minimize, MatchesTheReferenceMinimizerOnACoarseGrid) {
  const ProblemSpec s = scalar(Grid::interval(20.0, 20));
  const SolverResult r = multi_start(s, SolverConfig{});
  const auto ref = oracle::small_instance_ground_state(s);
  EXPECT_LE(std::abs(r.energy - ref.energy) / ref.energy, 1e-4);
}

TEST(Minimize, ConvergedStartIsAFixedPoint) {
  const ProblemSpec s = competing(Grid::interval(10.0, 150), -2.0);
  SolverConfig c;
  const SolverResult first = multi_start(s, c);
  const SolverResult again = minimize(s, c, first.state);
  EXPECT_LE(again.iterations, 5);
  EXPECT_NEAR(again.energy, first.energy, 1e-12 * first.energy);
}

TEST(Minimize, PureCompetitionLandsInEWithoutTheConstraint) {
  const ProblemSpec s = competing(Grid::interval(10.0, 200), -10.0);
  SolverConfig c;
  c.require_E = false;
  const SolverResult r = multi_start(s, c);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.in_E);
}

TEST(Minimize, EnergySequenceIsNonIncreasing) {
  const ProblemSpec s = make_constant_problem(Grid::radial_ball(8.0, 3, 120), Decomposition({0, 2, 3}), {1, 1, 1},
                                              {{1, 0.5, -1}, {0.5, 1, -1}, {-1, -1, 1}});
  const SolverResult r = minimize(s, SolverConfig{}, initial_guess(s, 3, InitialStyle::SegregatedBumps));
  ASSERT_FALSE(r.history.empty());
  for (std::size_t k = 1; k < r.history.size(); ++k) {
    EXPECT_LE(r.history[k].energy, r.history[k - 1].energy + 1e-12 * std::abs(r.history[k - 1].energy));
  }
}

TEST(Minimize, NaturalConstraintAtConvergence) {
  for (double b : {-0.5, -5.0}) {
    const ProblemSpec s = competing(Grid::interval(10.0, 200), b);
    const SolverResult r = multi_start(s, SolverConfig{});
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.multiplier_norm, 1e-5 * group_norms_sq(s, r.state).sum());
    EXPECT_LE(r.free_grad_norm, 1e-4);
  }
}

TEST(Minimize, SignInvariance) {
  const ProblemSpec s = competing(Grid::interval(10.0, 100), -2.0);
  SolverConfig with, without;
  without.enforce_nonneg = false;
  const State u0 = initial_guess(s, 5, InitialStyle::SegregatedBumps);
  const SolverResult a = minimize(s, with, u0);
  const SolverResult b = minimize(s, without, u0);
  EXPECT_NEAR(energy(s, a.state), energy(s, abs(a.state)), 1e-12 * a.energy);
  EXPECT_LE(a.energy, b.energy + 1e-10 * b.energy);
}

TEST(Minimize, Deterministic) {
  const ProblemSpec s = competing(Grid::interval(10.0, 150), -4.0);
  const SolverResult a = multi_start(s, SolverConfig{});
  const SolverResult b = multi_start(s, SolverConfig{});
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.seed, b.seed);
}

TEST(Minimize, RejectsBadConfig) {
  const ProblemSpec s = scalar(Grid::interval(5.0, 30));
  SolverConfig c;
  c.armijo_c = 1.5;
  EXPECT_THROW(minimize(s, c, initial_guess(s, 1, InitialStyle::SegregatedBumps)), ProblemError);
  c = SolverConfig{};
  c.restarts = 0;
  EXPECT_THROW(multi_start(s, c), ProblemError);
}

TEST(MultiStart, SingleRestartEqualsMinimize) {
  const ProblemSpec s = competing(Grid::interval(10.0, 120), -3.0);
  SolverConfig c;
  c.restarts = 1;
  c.rng_seed = 17;
  const SolverResult a = multi_start(s, c);
  const SolverResult b = minimize(s, c, initial_guess(s, 17, InitialStyle::SegregatedBumps));
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(MultiStart, BestEnergyIsMonotoneInRestarts) {
  const ProblemSpec s = make_constant_problem(Grid::interval(12.0, 150), Decomposition::singletons(3), {1, 1, 1},
                                              {{1, -2, -2}, {-2, 1, -2}, {-2, -2, 1}});
  double previous = std::numeric_limits<double>::infinity();
  for (int restarts : {1, 2, 4, 6}) {
    SolverConfig c;
    c.restarts = restarts;
    const double e = multi_start(s, c).energy;
    EXPECT_LE(e, previous);
    previous = e;
  }
}

TEST(MultiStart, MirrorSolutionsTieAndPickDeterministically) {
  const ProblemSpec s = competing(Grid::interval(10.0, 150), -2.0);
  const SolverResult r = multi_start(s, SolverConfig{});
  State mirrored = r.state;
  std::swap(mirrored.components[0], mirrored.components[1]);
  EXPECT_NEAR(energy(s, mirrored), r.energy, 1e-9 * r.energy);
  EXPECT_EQ(multi_start(s, SolverConfig{}).seed, r.seed);
}

TEST(MultiStart, ParallelMatchesSerial) {
  const ProblemSpec s = competing(Grid::interval(10.0, 100), -5.0);
  SolverConfig serial, parallel;
  parallel.parallel = true;
  const SolverResult a = multi_start(s, serial);
  const SolverResult b = multi_start(s, parallel);
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.seed, b.seed);
}

TEST(MultiStart, ReportsEverySeedWhenNothingConverges) {
  const ProblemSpec s = competing(Grid::interval(10.0, 100), -5.0);
  SolverConfig c;
  c.max_iters = 0;
  c.restarts = 2;
  try {
    multi_start(s, c);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("seed 1"), std::string::npos);
    EXPECT_NE(what.find("seed 2"), std::string::npos);
  }
}

TEST(RequireE, DefaultsFollowTheSignOfCrossCouplings) {
  const Grid g = Grid::interval(5.0, 30);
  EXPECT_FALSE(resolve_require_E(competing(g, -1.0), SolverConfig{}));
  EXPECT_TRUE(resolve_require_E(competing(g, 0.5), SolverConfig{}));
  SolverConfig c;
  c.require_E = true;
  EXPECT_TRUE(resolve_require_E(competing(g, -1.0), c));
}

TEST(Multipliers, VanishAtConvergenceAndForScalarNehariPoints) {
  const ProblemSpec s1 = scalar(Grid::interval(8.0, 100));
  const State p = initial_guess(s1, 3, InitialStyle::RandomPositive);
  EXPECT_LE(std::abs(lagrange_multipliers(s1, p)[0]), 1e-12);

  const ProblemSpec s = competing(Grid::interval(10.0, 150), -3.0);
  const SolverResult r = multi_start(s, SolverConfig{});
  const double u2 = std::pow(l2_norm(s, r.state), 2);
  EXPECT_LE(lagrange_multipliers(s, r.state).norm(), 1e-6 * u2);
}

TEST(Multipliers, FreeGradientSeparatesCriticalFromNonCriticalPoints) {
  // On N_B the multiplier system has a vanishing right-hand side, so the negative control
  // is the free gradient: large at a projected noisy start, small at convergence.
  const ProblemSpec s = competing(Grid::interval(10.0, 150), -3.0);
  SolverResult noisy;
  noisy.state = initial_guess(s, 4, InitialStyle::RandomPositive);
  fill_diagnostics(s, noisy);
  EXPECT_LE(noisy.multiplier_norm, 1e-10 * group_norms_sq(s, noisy.state).sum());
  EXPECT_GT(noisy.free_grad_norm, 1e-2);
  EXPECT_LE(multi_start(s, SolverConfig{}).free_grad_norm, 1e-4);
}
