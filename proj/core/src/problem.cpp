#include "cnls/problem.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cnls/errors.hpp"

namespace cnls {

namespace {

std::string pair_name(int i, int j) {
  return "beta[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
}

}  // namespace

Decomposition::Decomposition(std::vector<int> a) : a_(std::move(a)) {
  if (a_.size() < 2) throw ProblemError("decomposition: need at least a_0 and a_m");
  if (a_.front() != 0) throw ProblemError("decomposition: a_0 must be 0");
  for (std::size_t h = 1; h < a_.size(); ++h) {
    if (a_[h] <= a_[h - 1]) throw ProblemError("decomposition: entries must be strictly increasing");
  }
  group_.resize(a_.back());
  for (int h = 0; h < m(); ++h) {
    for (int i = a_[h]; i < a_[h + 1]; ++i) group_[i] = h;
  }
}

Decomposition Decomposition::singletons(int d) {
  std::vector<int> a(d + 1);
  for (int i = 0; i <= d; ++i) a[i] = i;
  return Decomposition(std::move(a));
}

Decomposition Decomposition::single_group(int d) { return Decomposition({0, d}); }

int Decomposition::group_of(int component) const {
  if (component < 0 || component >= d()) throw DimensionError("decomposition: component index out of range");
  return group_[component];
}

std::vector<IndexPair> Decomposition::k1_pairs() const {
  std::vector<IndexPair> out;
  for (int i = 0; i < d(); ++i)
    for (int j = 0; j < d(); ++j)
      if (i != j && group_[i] == group_[j]) out.emplace_back(i, j);
  return out;
}

std::vector<IndexPair> Decomposition::k2_pairs() const {
  std::vector<IndexPair> out;
  for (int i = 0; i < d(); ++i)
    for (int j = 0; j < d(); ++j)
      if (group_[i] != group_[j]) out.emplace_back(i, j);
  return out;
}

Coefficient Coefficient::broadcast(const Grid& g, double value) {
  return Coefficient{constant_field(g, value), value};
}

Coefficient Coefficient::sampled(Field values) { return Coefficient{std::move(values), std::nullopt}; }

ProblemSpec make_constant_problem(const Grid& g, const Decomposition& a, const std::vector<double>& potentials,
                                  const std::vector<std::vector<double>>& couplings) {
  const int d = a.d();
  if (static_cast<int>(potentials.size()) != d || static_cast<int>(couplings.size()) != d) {
    throw ProblemError("problem: potentials and couplings must have d entries");
  }
  ProblemSpec spec{g, a, {}, {}, {}};
  for (int i = 0; i < d; ++i) {
    spec.potential.push_back(Coefficient::broadcast(g, potentials[i]));
    if (static_cast<int>(couplings[i].size()) != d) throw ProblemError("problem: coupling matrix must be d x d");
    spec.coupling.emplace_back();
    for (int j = 0; j < d; ++j) spec.coupling[i].push_back(Coefficient::broadcast(g, couplings[i][j]));
    spec.mu.push_back(couplings[i][i]);
  }
  check_structure(spec);
  return spec;
}

void check_structure(const ProblemSpec& spec) {
  const int d = spec.d();
  const int n = spec.grid.n_interior();
  if (static_cast<int>(spec.potential.size()) != d) throw ProblemError("problem: expected d potentials");
  if (static_cast<int>(spec.coupling.size()) != d) throw ProblemError("problem: coupling must be d x d");
  if (static_cast<int>(spec.mu.size()) != d) throw ProblemError("problem: expected d values of mu");
  for (int i = 0; i < d; ++i) {
    const Field& v = spec.potential[i].values;
    if (v.size() != n) throw DimensionError("problem: V[" + std::to_string(i + 1) + "] not sampled on the grid");
    if (!v.allFinite()) throw ProblemError("problem: V[" + std::to_string(i + 1) + "] is not finite");
    if (static_cast<int>(spec.coupling[i].size()) != d) throw ProblemError("problem: coupling must be d x d");
    for (int j = 0; j < d; ++j) {
      const Field& b = spec.coupling[i][j].values;
      if (b.size() != n) throw DimensionError("problem: " + pair_name(i, j) + " not sampled on the grid");
      if (!b.allFinite()) throw ProblemError("problem: " + pair_name(i, j) + " is not finite");
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (spec.coupling[i][j].values != spec.coupling[j][i].values) {
        throw ProblemError("problem: coupling is not symmetric at " + pair_name(i, j));
      }
    }
    if (!(spec.mu[i] > 0.0)) throw ProblemError("problem: mu[" + std::to_string(i + 1) + "] must be positive");
    if (spec.coupling[i][i].min() < spec.mu[i]) {
      throw ProblemError("problem: " + pair_name(i, i) + " must be bounded below by mu[" + std::to_string(i + 1) +
                         "] > 0");
    }
  }
}

HypothesisReport validate(const ProblemSpec& spec) {
  check_structure(spec);
  HypothesisReport report;
  const auto& dec = spec.decomposition;

  report.potentials_nonnegative = true;
  for (int i = 0; i < spec.d(); ++i) {
    if (spec.potential[i].min() < 0.0) report.potentials_nonnegative = false;
  }
  report.h0_ok = report.potentials_nonnegative;

  report.h1_ok = true;
  for (auto [i, j] : dec.k1_pairs()) {
    if (spec.beta(i, j).minCoeff() < 0.0) {
      report.h1_ok = false;
      if (i < j) report.h1_violations.emplace_back(i, j);
    }
  }

  const auto k2 = dec.k2_pairs();
  report.max_pos_part_K2 = 0.0;
  report.min_competition_K2 = std::numeric_limits<double>::infinity();
  report.pure_competition_K2 = true;
  for (auto [i, j] : k2) {
    const Field& b = spec.beta(i, j);
    report.max_pos_part_K2 = std::max(report.max_pos_part_K2, std::max(0.0, b.maxCoeff()));
    report.min_competition_K2 = std::min(report.min_competition_K2, -b.maxCoeff());
    if (b.maxCoeff() > 0.0) report.pure_competition_K2 = false;
  }
  report.nonexistence_pairs = detect_nonexistence(spec);
  return report;
}

std::vector<IndexPair> detect_nonexistence(const ProblemSpec& spec) {
  const int d = spec.d();
  std::vector<IndexPair> out;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const Field& vi = spec.V(i);
      const Field& vj = spec.V(j);
      if ((vi.array() < vj.array()).any()) continue;
      bool strict = (vi.array() > vj.array()).any();
      bool ordered = true;
      for (int k = 0; k < d && ordered; ++k) {
        const Field& bik = spec.beta(i, k);
        const Field& bjk = spec.beta(j, k);
        if ((bik.array() > bjk.array()).any()) ordered = false;
        strict = strict || (bik.array() < bjk.array()).any();
      }
      if (ordered && strict) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace cnls
