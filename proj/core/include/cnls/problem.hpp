#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cnls/grid.hpp"

namespace cnls {

using IndexPair = std::pair<int, int>;

/// m-decomposition a = (0 = a_0 < a_1 < ... < a_m = d) splitting d components into m groups.
/// Components and groups are 0-based: group h holds components a_h .. a_{h+1} - 1.
class Decomposition {
 public:
  explicit Decomposition(std::vector<int> a);
  /// Every component in its own group.
  static Decomposition singletons(int d);
  /// All components in one group.
  static Decomposition single_group(int d);

  int d() const { return a_.back(); }
  int m() const { return static_cast<int>(a_.size()) - 1; }
  const std::vector<int>& boundaries() const { return a_; }

  int group_of(int component) const;
  int group_begin(int h) const { return a_[h]; }
  int group_end(int h) const { return a_[h + 1]; }
  int group_size(int h) const { return a_[h + 1] - a_[h]; }

  /// Same-group off-diagonal ordered pairs.
  std::vector<IndexPair> k1_pairs() const;
  /// Cross-group ordered pairs.
  std::vector<IndexPair> k2_pairs() const;

  bool operator==(const Decomposition&) const = default;

 private:
  std::vector<int> a_;
  std::vector<int> group_;
};

/// A coefficient sampled on the grid. Constants keep their exact value alongside the
/// broadcast field so reports can print them without quadrature noise.
struct Coefficient {
  Field values;
  std::optional<double> constant;

  static Coefficient broadcast(const Grid& g, double value);
  static Coefficient sampled(Field values);

  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
};

struct ProblemSpec {
  Grid grid;
  Decomposition decomposition;
  std::vector<Coefficient> potential;              // V_i
  std::vector<std::vector<Coefficient>> coupling;  // beta_ij
  std::vector<double> mu;                          // lower bounds for beta_ii

  int d() const { return decomposition.d(); }
  int m() const { return decomposition.m(); }
  const Field& V(int i) const { return potential[i].values; }
  const Field& beta(int i, int j) const { return coupling[i][j].values; }
};

/// Builds a problem with constant potentials and couplings. mu defaults to diag(beta).
ProblemSpec make_constant_problem(const Grid& g, const Decomposition& a, const std::vector<double>& potentials,
                                  const std::vector<std::vector<double>>& couplings);

/// Structural checks: sizes, pointwise symmetry of beta, beta_ii >= mu_i > 0, finiteness.
/// Throws ProblemError on violation.
void check_structure(const ProblemSpec& spec);

struct HypothesisReport {
  bool h0_ok = false;           // structural hypotheses plus V_i >= 0
  bool h1_ok = false;           // beta_ij >= 0 on K_1
  bool potentials_nonnegative = false;
  double max_pos_part_K2 = 0.0; // max over K_2 of sup beta_ij^+
  double min_competition_K2 = 0.0;  // min over K_2 and nodes of -beta_ij (the b in beta_ij <= -b); +inf if K_2 empty
  bool pure_competition_K2 = true;  // beta_ij <= 0 on all of K_2
  std::vector<IndexPair> h1_violations;
  std::vector<IndexPair> nonexistence_pairs;
};

/// Structural violations throw; hypothesis failures are reported as flags.
HypothesisReport validate(const ProblemSpec& spec);

/// Ordered pairs (i, j) with V_i >= V_j and beta_ik <= beta_jk for every k, pointwise on the
/// grid, with at least one of these inequalities strict at some node. For such pairs no
/// solution with u_i, u_j nonnegative and nontrivial exists.
std::vector<IndexPair> detect_nonexistence(const ProblemSpec& spec);

}  // namespace cnls
