#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cnls/nehari.hpp"
#include "cnls/problem.hpp"
#include "cnls/solver.hpp"

namespace cnls {

/// Raw a-priori quantities of a Nehari state. The constants bounding them are not explicit,
/// so only the constant-free inequalities are checked.
struct BoundsReport {
  bool valid = false;             // state is on N_B within the tolerance
  double nehari_residual = 0.0;
  double total_h1 = 0.0;          // sum_i ||u_i||_i^2
  double total_gradient = 0.0;    // sum_i integral |grad u_i|^2
  Eigen::VectorXd group_l4;       // sum over i in I_h of |u_i|_4^2
  double competitive_mass = 0.0;  // sum_ij integral beta_ij^- (u_i u_j)^2
  double cooperative_mass = 0.0;  // sum_ij integral beta_ij^+ (u_i u_j)^2
  double energy_identity_gap = 0.0;  // |J(u) - 1/4 sum_h ||u_h||^2|
  double sobolev_constant = 0.0;
  Eigen::VectorXd sobolev_gap;    // ||u_h||^2 - S sum_{i in I_h} |u_i|_4^2
  bool mass_inequality_holds = false;    // competitive_mass <= cooperative_mass
  bool sobolev_inequality_holds = false;  // every sobolev_gap >= -1e-9
};

/// `sobolev` overrides the grid Sobolev constant (computed when absent).
BoundsReport bounds_report(const ProblemSpec& spec, const State& u, std::optional<double> sobolev = std::nullopt,
                           double nehari_tol = 1e-8);

/// Entry (i, j) = integral (u_i u_j)^2; the diagonal holds integral u_i^4.
Eigen::MatrixXd overlap_matrix(const ProblemSpec& spec, const State& u);

/// Sum over K_2 of integral beta_ij^- (u_i u_j)^2.
double cross_group_competitive_mass(const ProblemSpec& spec, const State& u);

struct LimitDiagnostics {
  double energy = 0.0;          // J_inf: same-group interactions only
  Eigen::VectorXd residuals;    // ||u_h||^2 - M_inf(u)_hh
};

/// Limit functional evaluated with the problem's own V and same-group couplings as limit data.
LimitDiagnostics limit_energy_and_residuals(const ProblemSpec& spec, const State& u);

struct SecondVariation {
  double value = 0.0;                // D^2 J(u)[v, v]
  double max_tangency_residual = 0.0;  // max_h |<grad G_h(u), v>| / ||u_h||^2
};

/// Relative threshold below which a component counts as identically zero.
inline constexpr double kZeroComponentThreshold = 1e-6;

/// Second differential of J at u along v, where v equals u_donor in slot zero_index and
/// vanishes elsewhere; u_zero_index must be numerically zero and the donor must share its
/// group. Then v is tangent to N_B and the value is
///   ||u_donor||^2_{V_zero} - sum_k integral beta_{zero,k} (u_donor u_k)^2.
/// A negative value shows that the semi-trivial state is not a constrained local minimum.
SecondVariation second_variation_test(const ProblemSpec& spec, const State& u, int zero_index, int donor_index);

/// Free second differential D^2 J(u)[v, v].
double second_differential(const ProblemSpec& spec, const State& u, const State& v);

struct SegregationRecord {
  double b = 0.0;
  double energy = 0.0;
  std::vector<IndexPair> pairs;     // K_2 pairs with i < j
  std::vector<double> overlaps;     // integral (u_i u_j)^2 per pair
  double competitive_mass = 0.0;
  double limit_energy = 0.0;
  Eigen::VectorXd limit_residuals;
  double max_relative_limit_residual = 0.0;  // max_h |residual_h| / ||u_h||^2
  double min_component_l4 = 0.0;
};

SegregationRecord segregation_record(const ProblemSpec& spec, const State& u, double b);

/// Outcome of a solve in a regime where no positive solution exists: consistent when the
/// run produced no converged two-sided state, or one component collapsed.
struct NonexistenceCheck {
  bool consistent = false;
  bool solve_failed = false;
  double min_component_l4 = 0.0;
  double max_component_l4 = 0.0;
};

NonexistenceCheck nonexistence_consistent(const std::optional<SolverResult>& result, double collapse_ratio = 1e-3);

}  // namespace cnls
