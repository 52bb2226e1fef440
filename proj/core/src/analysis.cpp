#include "cnls/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cnls/errors.hpp"

namespace cnls {

BoundsReport bounds_report(const ProblemSpec& spec, const State& u, std::optional<double> sobolev, double nehari_tol) {
  BoundsReport r;
  const auto& dec = spec.decomposition;
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  r.nehari_residual = relative_nehari_residual(spec, u);
  r.valid = r.nehari_residual <= nehari_tol;
  r.total_h1 = b.sum();
  r.group_l4 = Eigen::VectorXd::Zero(dec.m());
  for (int i = 0; i < spec.d(); ++i) {
    r.total_gradient += stiffness(spec.grid, u[i], u[i]);
    r.group_l4[dec.group_of(i)] += norm_l4_sq(spec.grid, u[i]);
  }
  for (int i = 0; i < spec.d(); ++i) {
    for (int j = 0; j < spec.d(); ++j) {
      const Field q = u[i].cwiseProduct(u[j]).cwiseAbs2();
      r.competitive_mass += integrate(spec.grid, (-spec.beta(i, j)).cwiseMax(0.0).cwiseProduct(q));
      r.cooperative_mass += integrate(spec.grid, spec.beta(i, j).cwiseMax(0.0).cwiseProduct(q));
    }
  }
  r.energy_identity_gap = std::abs(energy(spec, u) - 0.25 * r.total_h1);
  r.sobolev_constant = sobolev ? *sobolev : sobolev_constant(spec.grid).value;
  r.sobolev_gap = b - r.sobolev_constant * r.group_l4;
  r.mass_inequality_holds = r.competitive_mass <= r.cooperative_mass;
  r.sobolev_inequality_holds = (r.sobolev_gap.array() >= -1e-9).all();
  return r;
}

Eigen::MatrixXd overlap_matrix(const ProblemSpec& spec, const State& u) {
  const int d = spec.d();
  Eigen::MatrixXd out(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const double v = integrate(spec.grid, u[i].cwiseProduct(u[j]).cwiseAbs2());
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double cross_group_competitive_mass(const ProblemSpec& spec, const State& u) {
  double total = 0.0;
  for (auto [i, j] : spec.decomposition.k2_pairs()) {
    const Field q = u[i].cwiseProduct(u[j]).cwiseAbs2();
    total += integrate(spec.grid, (-spec.beta(i, j)).cwiseMax(0.0).cwiseProduct(q));
  }
  return total;
}

LimitDiagnostics limit_energy_and_residuals(const ProblemSpec& spec, const State& u) {
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  const Eigen::VectorXd diag = interaction_matrix(spec, u).entries.diagonal();
  return LimitDiagnostics{0.5 * b.sum() - 0.25 * diag.sum(), b - diag};
}

double second_differential(const ProblemSpec& spec, const State& u, const State& v) {
  const int d = spec.d();
  double value = 0.0;
  for (int i = 0; i < d; ++i) value += inner_h1(spec.grid, v[i], v[i], spec.V(i));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Field& beta = spec.beta(i, j);
      value -= integrate(spec.grid, beta.cwiseProduct(u[i].cwiseProduct(v[j]).cwiseAbs2()));
      value -= 2.0 * integrate(spec.grid, beta.cwiseProduct(u[i]).cwiseProduct(u[j]).cwiseProduct(v[i]).cwiseProduct(v[j]));
    }
  }
  return value;
}

SecondVariation second_variation_test(const ProblemSpec& spec, const State& u, int zero_index, int donor_index) {
  const int d = spec.d();
  if (zero_index < 0 || zero_index >= d || donor_index < 0 || donor_index >= d || zero_index == donor_index) {
    throw ProblemError("second_variation_test: invalid component indices");
  }
  const auto& dec = spec.decomposition;
  if (dec.group_of(zero_index) != dec.group_of(donor_index)) {
    throw ProblemError("second_variation_test: donor must belong to the group of the zero component");
  }
  double largest = 0.0;
  for (int k = 0; k < d; ++k) largest = std::max(largest, norm_l4_sq(spec.grid, u[k]));
  if (norm_l4_sq(spec.grid, u[zero_index]) > kZeroComponentThreshold * largest) {
    throw ProblemError("second_variation_test: component " + std::to_string(zero_index + 1) + " is not numerically zero");
  }

  State v = State::zeros(spec);
  v[zero_index] = u[donor_index];

  SecondVariation out;
  const Field& donor = u[donor_index];
  out.value = inner_h1(spec.grid, donor, donor, spec.V(zero_index));
  for (int k = 0; k < d; ++k) {
    out.value -= integrate(spec.grid, spec.beta(zero_index, k).cwiseProduct(donor.cwiseProduct(u[k]).cwiseAbs2()));
  }
  const Eigen::VectorXd dG = constraint_differential(spec, u, v);
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  for (int h = 0; h < spec.m(); ++h) {
    out.max_tangency_residual = std::max(out.max_tangency_residual, std::abs(dG[h]) / std::max(b[h], 1e-300));
  }
  return out;
}

SegregationRecord segregation_record(const ProblemSpec& spec, const State& u, double b) {
  SegregationRecord rec;
  rec.b = b;
  rec.energy = energy(spec, u);
  const Eigen::MatrixXd ov = overlap_matrix(spec, u);
  for (auto [i, j] : spec.decomposition.k2_pairs()) {
    if (i < j) {
      rec.pairs.emplace_back(i, j);
      rec.overlaps.push_back(ov(i, j));
    }
  }
  rec.competitive_mass = cross_group_competitive_mass(spec, u);
  const LimitDiagnostics lim = limit_energy_and_residuals(spec, u);
  rec.limit_energy = lim.energy;
  rec.limit_residuals = lim.residuals;
  const Eigen::VectorXd norms = group_norms_sq(spec, u);
  for (int h = 0; h < spec.m(); ++h) {
    rec.max_relative_limit_residual = std::max(rec.max_relative_limit_residual, std::abs(lim.residuals[h]) / norms[h]);
  }
  rec.min_component_l4 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < spec.d(); ++i) rec.min_component_l4 = std::min(rec.min_component_l4, norm_l4_sq(spec.grid, u[i]));
  return rec;
}

NonexistenceCheck nonexistence_consistent(const std::optional<SolverResult>& result, double collapse_ratio) {
  NonexistenceCheck out;
  if (!result || !result->converged) {
    out.solve_failed = true;
    out.consistent = true;
  }
  if (result && !result->component_l4.empty()) {
    out.min_component_l4 = *std::min_element(result->component_l4.begin(), result->component_l4.end());
    out.max_component_l4 = *std::max_element(result->component_l4.begin(), result->component_l4.end());
    if (out.min_component_l4 < collapse_ratio * out.max_component_l4) out.consistent = true;
  }
  return out;
}

}  // namespace cnls
