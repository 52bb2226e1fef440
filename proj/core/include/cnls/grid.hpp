#pragma once

#include <optional>

#include <Eigen/Core>

namespace cnls {

/// Nodal values on the interior nodes of a Grid. Boundary values are implicitly zero.
using Field = Eigen::VectorXd;

enum class GridKind { Interval, RadialBall };

/// One-dimensional finite-difference grid.
///
/// Interval: nodes x_k = k h on (0, L), Dirichlet at both ends.
/// RadialBall: radial nodes r_k = k h on (0, R) (r_k = (k - 1/2) h for N = 1) for radially
/// symmetric functions on the N-ball, Dirichlet at r = R and a symmetric ghost
/// u(-r_1) = u(r_1) at the centre.
///
/// The discrete Dirichlet form is written as a sum over edges e = 0..n joining node e and
/// node e + 1 (node 0 is the left end / centre, node n + 1 the outer boundary):
///
///   a(u, v) = omega * sum_e c_e (s_{e+1} u_{e+1} - s_e u_e)(s_{e+1} v_{e+1} - s_e v_e) / h
///
/// and the Laplacian is the operator with integrate(L u * v) == a(u, v), so summation by
/// parts holds to roundoff. For N = 3 the node scales are s_k = r_k (the (r u)'' form of
/// the radial Laplacian, which has sin(pi r / R) / r as an exact discrete eigenvector); for
/// N = 1, 2 the edge coefficients are r_{e+1/2}^{N-1} and the edge through the centre
/// carries no flux.
class Grid {
 public:
  static Grid interval(double length, int n_interior);
  static Grid radial_ball(double radius, int dimension, int n_interior);

  GridKind kind() const { return kind_; }
  double size() const { return size_; }
  int dimension() const { return dimension_; }
  int n_interior() const { return n_; }
  double spacing() const { return spacing_; }

  /// Node coordinates x_k (or r_k), k = 1..n.
  const Field& nodes() const { return nodes_; }
  /// Quadrature weights h (Interval) or h r_k^{N-1} (RadialBall), without the angular factor.
  const Field& weights() const { return weights_; }
  /// Measure of the unit sphere: 1 for Interval, 2, 2 pi, 4 pi for radial N = 1, 2, 3.
  double angular_factor() const { return angular_; }

  /// Edge coefficients c_e, e = 0..n.
  const Field& edge_coefficients() const { return edge_coef_; }
  /// Node scales s_k, k = 0..n+1 (entries 0 and n+1 multiply the implicit zero boundary values).
  const Field& node_scales() const { return scales_; }

  bool same_as(const Grid& other) const;

 private:
  Grid() = default;
  void build_edges();

  GridKind kind_ = GridKind::Interval;
  double size_ = 1.0;
  int dimension_ = 1;
  int n_ = 0;
  double spacing_ = 0.0;
  double angular_ = 1.0;
  Field nodes_;
  Field weights_;
  Field edge_coef_;
  Field scales_;
};

Field constant_field(const Grid& g, double value);

/// Discrete -Delta u.
Field apply_laplacian(const Grid& g, const Field& u);

/// Quadrature of f over the domain (angular factor included for RadialBall).
double integrate(const Grid& g, const Field& f);

/// Discrete Dirichlet form: integral of grad u . grad v.
double stiffness(const Grid& g, const Field& u, const Field& v);

/// <u, v>_V = integral of grad u . grad v + V u v.
double inner_h1(const Grid& g, const Field& u, const Field& v, const Field& potential);
double inner_h1(const Grid& g, const Field& u, const Field& v, double potential);

/// |u|_4^2 = (integral of u^4)^{1/2}.
double norm_l4_sq(const Grid& g, const Field& u);

/// Solves (-Delta + V) x = rhs. V must be nonnegative so the operator is positive definite.
Field solve_shifted_laplacian(const Grid& g, const Field& potential, const Field& rhs);

struct SobolevResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct SobolevOptions {
  int starts = 5;
  int max_iters = 4000;
  double tolerance = 1e-8;
  unsigned long long seed = 7;
};

/// Numerical infimum of (integral |grad u|^2 + V u^2) / |u|_4^2 over nonzero fields, by
/// H^1-preconditioned normalized gradient descent from several starts. Non-convergence is
/// reported through the flag; the best value found is always returned.
SobolevResult sobolev_constant(const Grid& g, const std::optional<Field>& zero_order = std::nullopt,
                               const SobolevOptions& options = {});

}  // namespace cnls
