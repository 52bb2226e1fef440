#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cnls/errors.hpp"
#include "cnls/nehari.hpp"
#include "cnls/oracle.hpp"

using namespace cnls;

namespace {

// Component i is a sin^2 bump on its own window [i/d, (i+1)/d) of the domain.
State segregated(const ProblemSpec& spec, double amplitude = 1.0) {
  State u = State::zeros(spec);
  const int n = spec.grid.n_interior();
  const int d = spec.d();
  for (int i = 0; i < d; ++i) {
    const int lo = i * n / d, hi = (i + 1) * n / d;
    for (int k = lo; k < hi; ++k) {
      const double s = std::sin(std::numbers::pi * (k - lo + 1) / (hi - lo + 1));
      u[i][k] = amplitude * (1.0 + 0.3 * i) * s * s;
    }
  }
  return u;
}

State random_state(const ProblemSpec& spec, std::mt19937_64& rng, double lo = 0.1, double hi = 1.0) {
  std::uniform_real_distribution<double> unit(lo, hi);
  State u = State::zeros(spec);
  for (int i = 0; i < spec.d(); ++i)
    for (int k = 0; k < spec.grid.n_interior(); ++k) u[i][k] = unit(rng) * std::sin(std::numbers::pi * spec.grid.nodes()[k] / spec.grid.size());
  return u;
}

ProblemSpec three_two(const Grid& g) {
  return make_constant_problem(g, Decomposition({0, 2, 3}), {1, 1.5, 0.5}, {{1, 0.4, -0.5}, {0.4, 2, -0.2}, {-0.5, -0.2, 1.5}});
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST(InteractionMatrix, ZeroStateGivesZeroMatrix) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  EXPECT_EQ(interaction_matrix(s, State::zeros(s)).entries.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InteractionMatrix, SegregatedStateIsDiagonal) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 90));
  const State u = segregated(s);
  const Eigen::MatrixXd M = interaction_matrix(s, u).entries;
  EXPECT_EQ(M(0, 1), 0.0);
  EXPECT_EQ(M(1, 0), 0.0);
  const double m00 = integrate(s.grid, u[0].array().pow(4).matrix()) + 2.0 * integrate(s.grid, u[1].array().pow(4).matrix());
  EXPECT_NEAR(M(0, 0), m00, 1e-13 * m00);
  EXPECT_NEAR(M(1, 1), 1.5 * integrate(s.grid, u[2].array().pow(4).matrix()), 1e-13);
}

TEST(InteractionMatrix, SingleGroupOfTwoByQuadrature) {
  const Grid g = Grid::interval(3.0, 50);
  const ProblemSpec s = make_constant_problem(g, Decomposition::single_group(2), {1, 1}, {{1.2, 0.3}, {0.3, 0.8}});
  std::mt19937_64 rng(3);
  const State u = random_state(s, rng);
  const Field a = u[0].cwiseAbs2(), b = u[1].cwiseAbs2();
  const double expected = 1.2 * integrate(g, a.cwiseAbs2()) + 2.0 * 0.3 * integrate(g, a.cwiseProduct(b)) +
                          0.8 * integrate(g, b.cwiseAbs2());
  EXPECT_NEAR(interaction_matrix(s, u).entries(0, 0), expected, 1e-13 * expected);
}

TEST(InteractionMatrix, SymmetricWithNonnegativeDiagonal) {
  const ProblemSpec s = three_two(Grid::radial_ball(3.0, 3, 40));
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd M = interaction_matrix(s, random_state(s, rng)).entries;
    EXPECT_LE((M - M.transpose()).cwiseAbs().maxCoeff(), 1e-12 * M.cwiseAbs().maxCoeff());
    EXPECT_GT(M.diagonal().minCoeff(), 0.0);
  }
}

TEST(Energy, ZeroEvenAndIdentityOnNehari) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 80));
  EXPECT_EQ(energy(s, State::zeros(s)), 0.0);
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const State u = random_state(s, rng, -1.0, 1.0);
    EXPECT_EQ(energy(s, u), energy(s, -1.0 * u));
    State flipped = u;
    flipped[1] *= -1.0;
    EXPECT_NEAR(energy(s, u), energy(s, flipped), 1e-12 * std::abs(energy(s, u)));
  }
  const State p = project_to_nehari(s, segregated(s));
  const Eigen::VectorXd b = group_norms_sq(s, p);
  EXPECT_LE(std::abs(energy(s, p) - 0.25 * b.sum()), 1e-10 * b.sum());
}

TEST(Gradient, ZeroAtTheOrigin) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 30));
  const State g = gradient(s, State::zeros(s));
  for (int i = 0; i < s.d(); ++i) EXPECT_EQ(g[i].cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(6);
  for (const Grid& g : {Grid::interval(4.0, 40), Grid::radial_ball(3.0, 3, 30), Grid::radial_ball(3.0, 2, 30)}) {
    const ProblemSpec s = three_two(g);
    for (int rep = 0; rep < 5; ++rep) {
      const State u = random_state(s, rng, -1.0, 1.0);
      const State phi = random_state(s, rng, -1.0, 1.0);
      const double eps = 1e-5;
      const double fd = (energy(s, u + eps * phi) - energy(s, u + (-eps) * phi)) / (2 * eps);
      const double an = directional_derivative(s, gradient(s, u), phi);
      EXPECT_LE(relative_gap(an, fd), 1e-5);

      const State gfd = oracle::fd_gradient(s, u, 1e-6);
      const State gan = gradient(s, u);
      double num = 0.0, den = 0.0;
      for (int i = 0; i < s.d(); ++i) {
        num += (gfd[i] - gan[i]).squaredNorm();
        den += gan[i].squaredNorm();
      }
      EXPECT_LE(std::sqrt(num / den), 1e-5);
    }
  }
}

TEST(Gradient, ScaledEigenfunctionIsOrthogonalToItsGradient) {
  const Grid g = Grid::interval(5.0, 120);
  const ProblemSpec s = make_constant_problem(g, Decomposition::singletons(1), {1}, {{1}});
  State u = State::zeros(s);
  for (int k = 0; k < g.n_interior(); ++k) u[0][k] = std::sin(std::numbers::pi * g.nodes()[k] / g.size());
  const State p = project_to_nehari(s, u);
  EXPECT_LE(std::abs(directional_derivative(s, gradient(s, p), p)), 1e-12 * group_norms_sq(s, p)[0]);
}

TEST(Residuals, ZeroStateHasZeroResidualsButIsOffTheManifold) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 30));
  EXPECT_EQ(nehari_residuals(s, State::zeros(s)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_FALSE(on_nehari(s, State::zeros(s)));
}

TEST(Residuals, SignChangeAlongTheRayForOneGroup) {
  const Grid g = Grid::interval(4.0, 50);
  const ProblemSpec s = make_constant_problem(g, Decomposition::single_group(2), {1, 1}, {{1, 0.5}, {0.5, 1}});
  std::mt19937_64 rng(7);
  const State u = random_state(s, rng);
  const double b = group_norms_sq(s, u)[0];
  const double m = interaction_matrix(s, u).entries(0, 0);
  for (double c : {0.1, 0.7, 3.0}) {
    EXPECT_NEAR(nehari_residuals(s, c * u)[0], c * c * b - std::pow(c, 4) * m, 1e-12 * std::max(1.0, std::pow(c, 4) * m));
  }
  EXPECT_GT(nehari_residuals(s, 1e-3 * u)[0], 0.0);
  EXPECT_LT(nehari_residuals(s, 1e3 * u)[0], 0.0);
}

TEST(Membership, SegregatedStateHasDiagonalMargins) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 90));
  const State u = segregated(s);
  const EMembership e = is_in_E(s, u);
  EXPECT_TRUE(e.inside);
  const Eigen::MatrixXd M = interaction_matrix(s, u).entries;
  EXPECT_EQ(e.margins[0], M(0, 0));
  EXPECT_EQ(e.margins[1], M(1, 1));
  EXPECT_FALSE(is_in_E(s, State::zeros(s)).inside);
}

TEST(Membership, GershgorinAgainstTheJacobiOracle) {
  const Grid g = Grid::interval(4.0, 40);
  const ProblemSpec s = make_constant_problem(g, Decomposition::singletons(3), {1, 1, 1},
                                              {{1, -0.6, 0.4}, {-0.6, 2, -0.9}, {0.4, -0.9, 1.3}});
  std::mt19937_64 rng(8);
  int inside = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const State u = random_state(s, rng, 0.0, 1.0);
    const Eigen::MatrixXd M = interaction_matrix(s, u).entries;
    if (!is_in_E(s, u).inside) continue;
    ++inside;
    EXPECT_GT(oracle::eig_min_sym(M), 0.0);
  }
  EXPECT_GT(inside, 0);
}

TEST(Psi, ZeroScalingAndScalingIdentity) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> t01(0.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const State u = random_state(s, rng);
    EXPECT_EQ(psi(s, u, Eigen::VectorXd::Zero(2)), 0.0);
    const Eigen::VectorXd t = Eigen::Vector2d(t01(rng), t01(rng));
    const double lhs = energy(s, scale_groups(s, u, t));
    EXPECT_LE(relative_gap(lhs, psi(s, u, t)), 1e-10);
  }
  EXPECT_THROW(psi(s, segregated(s), Eigen::Vector2d(-1.0, 1.0)), ProblemError);
}

TEST(Psi, EqualsEnergyAtOneOnTheManifold) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  const State p = project_to_nehari(s, segregated(s));
  EXPECT_LE(relative_gap(psi(s, p, Eigen::Vector2d::Ones()), energy(s, p)), 1e-14);
}

TEST(MaximizePsi, DiagonalMatrixGivesClosedForm) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 90));
  const State u = segregated(s, 0.7);
  const PsiMaximum pm = maximize_psi(s, u);
  const Eigen::VectorXd b = group_norms_sq(s, u);
  const Eigen::MatrixXd M = interaction_matrix(s, u).entries;
  EXPECT_EQ(pm.status, PsiStatus::Interior);
  for (int h = 0; h < 2; ++h) EXPECT_LE(relative_gap(pm.t[h], b[h] / M(h, h)), 1e-12);
}

TEST(MaximizePsi, OneOnTheManifold) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  std::mt19937_64 rng(10);
  const State p = project_to_nehari(s, random_state(s, rng));
  ASSERT_TRUE(is_in_E(s, p).inside);
  EXPECT_LE((maximize_psi(s, p).t - Eigen::Vector2d::Ones()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MaximizePsi, AgreesWithBruteForceGrid) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int m : {2, 3}) {
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::MatrixXd A(m, m);
      for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c) A(a, c) = unit(rng);
      const Eigen::MatrixXd M = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(m, m);
      Eigen::VectorXd b(m);
      for (int a = 0; a < m; ++a) b[a] = 0.2 + std::abs(unit(rng));
      const PsiMaximum pm = maximize_quadratic_orthant(M, b);
      const double T = 2.0 * pm.t.maxCoeff() + 1.0;
      const Eigen::VectorXd tb = oracle::brute_force_psi_max(M, b, T, m == 2 ? 400 : 120);
      EXPECT_LE((tb - pm.t).cwiseAbs().maxCoeff(), 1e-3);
    }
  }
}

TEST(MaximizePsi, StatusClassification) {
  EXPECT_EQ(maximize_quadratic_orthant((Eigen::Matrix2d() << 1, -2, -2, 1).finished(), Eigen::Vector2d(1, 1)).status,
            PsiStatus::Unbounded);
  const PsiMaximum boundary = maximize_quadratic_orthant((Eigen::Matrix2d() << 1, 2, 2, 1).finished(), Eigen::Vector2d(1, 0.1));
  EXPECT_EQ(boundary.status, PsiStatus::Boundary);
  EXPECT_NEAR(boundary.t[0], 1.0, 1e-15);
  EXPECT_EQ(boundary.t[1], 0.0);
  // Indefinite but copositive: the interior critical point (1/3, 1/3) has value 1/6, the
  // face maxima (1, 0) and (0, 1) have value 1/4.
  const PsiMaximum face = maximize_quadratic_orthant((Eigen::Matrix2d() << 1, 2, 2, 1).finished(), Eigen::Vector2d(1, 1));
  EXPECT_EQ(face.status, PsiStatus::Boundary);
  EXPECT_NEAR(face.value, 0.25, 1e-15);
  EXPECT_THROW(maximize_quadratic_orthant(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 0)), ProjectionError);
}

TEST(Projection, FixedPointOnTheManifold) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  const State p = project_to_nehari(s, segregated(s));
  const State q = project_to_nehari(s, p);
  for (int i = 0; i < s.d(); ++i) EXPECT_LE((q[i] - p[i]).cwiseAbs().maxCoeff(), 1e-14 * p[i].cwiseAbs().maxCoeff());
}

TEST(Projection, ScalarNehariScaling) {
  const Grid g = Grid::radial_ball(4.0, 3, 50);
  const ProblemSpec s = make_constant_problem(g, Decomposition::singletons(1), {0.5}, {{2}});
  std::mt19937_64 rng(12);
  const State u = random_state(s, rng);
  const double t = inner_h1(g, u[0], u[0], 0.5) / (2.0 * integrate(g, u[0].array().pow(4).matrix()));
  const State p = project_to_nehari(s, u);
  EXPECT_LE((p[0] - std::sqrt(t) * u[0]).cwiseAbs().maxCoeff(), 1e-13 * p[0].cwiseAbs().maxCoeff());
}

TEST(Projection, ResidualVanishesWhenRecomputedIndependently) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 90));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> amp(0.2, 3.0);
  for (int rep = 0; rep < 10; ++rep) {
    State u = segregated(s);
    for (int i = 0; i < s.d(); ++i) u[i] *= amp(rng);
    const State p = project_to_nehari(s, u);
    // G_0 = |u_0|^2 + |u_1|^2 - sum_jk beta_jk integral u_j^2 u_k^2 over the rows of group 0.
    double G0 = inner_h1(s.grid, p[0], p[0], 1.0) + inner_h1(s.grid, p[1], p[1], 1.5);
    double G1 = inner_h1(s.grid, p[2], p[2], 0.5);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double q = integrate(s.grid, s.beta(i, j).cwiseProduct(p[i].cwiseAbs2()).cwiseProduct(p[j].cwiseAbs2()));
        (i < 2 ? G0 : G1) -= q;
      }
    }
    const Eigen::VectorXd b = group_norms_sq(s, p);
    EXPECT_LE(std::abs(G0) / b[0], 1e-10);
    EXPECT_LE(std::abs(G1) / b[1], 1e-10);
  }
}

TEST(Projection, Idempotent) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const State p = project_to_nehari(s, random_state(s, rng));
    const State q = project_to_nehari(s, p);
    for (int i = 0; i < s.d(); ++i) EXPECT_LE((q[i] - p[i]).cwiseAbs().maxCoeff(), 1e-9 * p[i].cwiseAbs().maxCoeff());
  }
}

TEST(Projection, FailsWhenPsiIsUnbounded) {
  const Grid g = Grid::interval(4.0, 40);
  const ProblemSpec s = make_constant_problem(g, Decomposition::singletons(2), {1, 1}, {{1, -50}, {-50, 1}});
  State u = State::zeros(s);
  u[0] = constant_field(g, 1.0);
  u[1] = constant_field(g, 1.0);
  EXPECT_THROW(project_to_nehari(s, u), ProjectionError);
}

TEST(TangentProject, AnnihilatesEveryConstraintDifferential) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  std::mt19937_64 rng(15);
  auto hn = [&](const State& x) {
    double v = 0.0;
    for (int i = 0; i < s.d(); ++i) v += inner_h1(s.grid, x[i], x[i], s.V(i));
    return std::sqrt(v);
  };
  const State u = project_to_nehari(s, random_state(s, rng));
  for (int rep = 0; rep < 20; ++rep) {
    const State w = random_state(s, rng, -1.0, 1.0);
    const State v = tangent_project(s, u, w);
    EXPECT_LE(constraint_differential(s, u, v).cwiseAbs().maxCoeff(), 1e-9 * hn(u) * hn(w));
  }
  const State v = tangent_project(s, u, u);
  EXPECT_LE(constraint_differential(s, u, v).cwiseAbs().maxCoeff(), 1e-9 * hn(u) * hn(u));
}

TEST(TangentProject, TangentVectorsAreUnchanged) {
  const ProblemSpec s = three_two(Grid::interval(4.0, 60));
  std::mt19937_64 rng(16);
  const State u = project_to_nehari(s, random_state(s, rng));
  const State v = tangent_project(s, u, random_state(s, rng, -1.0, 1.0));
  const State v2 = tangent_project(s, u, v);
  for (int i = 0; i < s.d(); ++i) EXPECT_LE((v2[i] - v[i]).cwiseAbs().maxCoeff(), 1e-10 * v[i].cwiseAbs().maxCoeff());
}

TEST(TangentProject, ScalarClosedForm) {
  const Grid g = Grid::interval(3.0, 40);
  const ProblemSpec s = make_constant_problem(g, Decomposition::singletons(1), {1}, {{1}});
  std::mt19937_64 rng(17);
  const State u = project_to_nehari(s, random_state(s, rng));
  const State w = random_state(s, rng, -1.0, 1.0);
  const double dGu = constraint_differential(s, u, u)[0];
  EXPECT_NEAR(dGu, -2.0 * group_norms_sq(s, u)[0], 1e-12 * group_norms_sq(s, u)[0]);
  const State expected = w + (-constraint_differential(s, u, w)[0] / dGu) * u;
  const State v = tangent_project(s, u, w);
  EXPECT_LE((v[0] - expected[0]).cwiseAbs().maxCoeff(), 1e-12 * w[0].cwiseAbs().maxCoeff());
}
