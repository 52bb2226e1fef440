#pragma once

#include <vector>

#include <Eigen/Core>

#include "cnls/grid.hpp"
#include "cnls/problem.hpp"

namespace cnls {

/// u = (u_1, ..., u_d), every component on the problem grid.
struct State {
  std::vector<Field> components;

  static State zeros(const ProblemSpec& spec);
  int d() const { return static_cast<int>(components.size()); }
  Field& operator[](int i) { return components[i]; }
  const Field& operator[](int i) const { return components[i]; }

  State& operator+=(const State& other);
  State& operator*=(double c);
  bool all_finite() const;
};

State operator+(State a, const State& b);
State operator*(double c, State a);
/// Componentwise |u_i|.
State abs(State u);

/// m x m matrix M(B, u)_{hk} = sum over (i, j) in I_h x I_k of integral beta_ij u_i^2 u_j^2.
struct InteractionMatrix {
  Eigen::MatrixXd entries;
};

/// Pairwise quartic integrals Q_ij = integral beta_ij u_i^2 u_j^2 (d x d).
Eigen::MatrixXd pair_interactions(const ProblemSpec& spec, const State& u);
InteractionMatrix interaction_matrix(const ProblemSpec& spec, const State& u);

/// ||u_h||_h^2 = sum over i in I_h of <u_i, u_i>_{V_i}.
Eigen::VectorXd group_norms_sq(const ProblemSpec& spec, const State& u);

double energy(const ProblemSpec& spec, const State& u);

/// L^2 gradient: component i is -Delta u_i + V_i u_i - sum_j beta_ij u_j^2 u_i, so that
/// sum_i integrate(g_i phi_i) is the directional derivative of the energy along phi.
State gradient(const ProblemSpec& spec, const State& u);

/// Directional derivative of the energy: sum_i integrate(g_i phi_i).
double directional_derivative(const ProblemSpec& spec, const State& grad, const State& phi);

/// G_h = ||u_h||_h^2 - sum_k M_hk.
Eigen::VectorXd nehari_residuals(const ProblemSpec& spec, const State& u);

/// max_h |G_h| / ||u_h||^2; infinity when some group norm vanishes.
double relative_nehari_residual(const ProblemSpec& spec, const State& u);

/// Membership in N_B: every group norm positive and every relative residual below tol.
bool on_nehari(const ProblemSpec& spec, const State& u, double tol = 1e-10);

struct EMembership {
  bool inside = false;
  Eigen::VectorXd margins;  // M_hh - sum_{k != h} |M_hk|
};

/// Strict diagonal dominance of M(B, u).
EMembership is_in_E(const ProblemSpec& spec, const State& u);
EMembership is_in_E(const InteractionMatrix& M);

/// State equal to u_h on group h and zero elsewhere.
State group_direction(const ProblemSpec& spec, const State& u, int h);

/// Returns (sqrt(t_1) u_1-group, ..., sqrt(t_m) u_m-group).
State scale_groups(const ProblemSpec& spec, const State& u, const Eigen::VectorXd& t);

/// Psi(t) = 1/2 sum_h ||u_h||^2 t_h - 1/4 M t.t, the energy of scale_groups(u, t). t >= 0.
double psi(const ProblemSpec& spec, const State& u, const Eigen::VectorXd& t);

enum class PsiStatus { Interior, Boundary, Unbounded };

const char* to_string(PsiStatus status);

struct PsiMaximum {
  Eigen::VectorXd t;
  PsiStatus status = PsiStatus::Unbounded;
  double value = 0.0;
};

inline constexpr int kMaxGroups = 8;

/// Maximizes 1/2 b.t - 1/4 M t.t over the closed orthant t >= 0 by enumerating the 2^m
/// support sets: on a support S solve M_SS t_S = b_S, keep candidates with t_S > 0 and
/// nonpositive partial derivatives off S, return the best. When M is not strictly
/// copositive and b > 0 the quadratic is unbounded above along an orthant ray and the
/// status is Unbounded. Requires m <= 8 and b > 0.
PsiMaximum maximize_quadratic_orthant(const Eigen::MatrixXd& M, const Eigen::VectorXd& b);

/// maximize_quadratic_orthant with M = M(B, u), b = group norms of u.
PsiMaximum maximize_psi(const ProblemSpec& spec, const State& u);

/// Strict copositivity of a symmetric matrix (M t.t > 0 for every nonzero t >= 0), via the
/// principal-submatrix eigenvector criterion. Requires m <= 8.
bool strictly_copositive(const Eigen::MatrixXd& M);

/// Rescales the groups of u onto N_B using the maximizer of Psi. Throws ProjectionError when
/// Psi is unbounded or the maximizer switches a group off.
State project_to_nehari(const ProblemSpec& spec, const State& u);

/// Same as project_to_nehari but also returns the scaling.
State project_to_nehari(const ProblemSpec& spec, const State& u, PsiMaximum& scaling);

/// <grad G_h(u), phi> for h = 1..m.
Eigen::VectorXd constraint_differential(const ProblemSpec& spec, const State& u, const State& phi);

/// Projects w onto the tangent space of N_B at u along the group directions:
/// v = w - sum_h c_h e_h with <grad G_h(u), v> = 0 for every h. On N_B the m x m system
/// is -2 M(B, u). Throws NotInEError when that system is singular.
State tangent_project(const ProblemSpec& spec, const State& u, const State& w);

}  // namespace cnls
