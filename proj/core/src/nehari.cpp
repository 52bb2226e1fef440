#include "cnls/nehari.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "cnls/errors.hpp"

namespace cnls {

namespace {

void require_state(const ProblemSpec& spec, const State& u, const char* what) {
  if (u.d() != spec.d()) {
    throw DimensionError(std::string(what) + ": state has " + std::to_string(u.d()) + " components, problem has " +
                         std::to_string(spec.d()));
  }
  for (const Field& f : u.components) {
    if (f.size() != spec.grid.n_interior()) throw DimensionError(std::string(what) + ": component not on the grid");
  }
}

std::vector<int> support_of(unsigned mask, int m) {
  std::vector<int> s;
  for (int h = 0; h < m; ++h)
    if (mask & (1u << h)) s.push_back(h);
  return s;
}

Eigen::MatrixXd principal(const Eigen::MatrixXd& M, const std::vector<int>& s) {
  const int k = static_cast<int>(s.size());
  Eigen::MatrixXd out(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) out(a, b) = M(s[a], s[b]);
  return out;
}

double trace_scale(const Eigen::MatrixXd& M) { return M.diagonal().cwiseAbs().sum(); }

}  // namespace

State State::zeros(const ProblemSpec& spec) {
  State u;
  u.components.assign(spec.d(), Field::Zero(spec.grid.n_interior()));
  return u;
}

State& State::operator+=(const State& other) {
  if (other.d() != d()) throw DimensionError("state: component count mismatch");
  for (int i = 0; i < d(); ++i) components[i] += other.components[i];
  return *this;
}

State& State::operator*=(double c) {
  for (Field& f : components) f *= c;
  return *this;
}

bool State::all_finite() const {
  for (const Field& f : components)
    if (!f.allFinite()) return false;
  return true;
}

State operator+(State a, const State& b) { return a += b; }
State operator*(double c, State a) { return a *= c; }

State abs(State u) {
  for (Field& f : u.components) f = f.cwiseAbs();
  return u;
}

Eigen::MatrixXd pair_interactions(const ProblemSpec& spec, const State& u) {
  require_state(spec, u, "pair_interactions");
  const int d = spec.d();
  std::vector<Field> squares;
  squares.reserve(d);
  for (const Field& f : u.components) squares.push_back(f.cwiseProduct(f));
  Eigen::MatrixXd Q(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const double q = integrate(spec.grid, spec.beta(i, j).cwiseProduct(squares[i]).cwiseProduct(squares[j]));
      Q(i, j) = q;
      Q(j, i) = q;
    }
  }
  return Q;
}

InteractionMatrix interaction_matrix(const ProblemSpec& spec, const State& u) {
  const Eigen::MatrixXd Q = pair_interactions(spec, u);
  const auto& dec = spec.decomposition;
  const int m = dec.m();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < spec.d(); ++i)
    for (int j = 0; j < spec.d(); ++j) M(dec.group_of(i), dec.group_of(j)) += Q(i, j);
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw ProblemError("interaction_matrix: asymmetric assembly, coupling matrix is not symmetric");
  }
  return InteractionMatrix{0.5 * (M + M.transpose())};
}

Eigen::VectorXd group_norms_sq(const ProblemSpec& spec, const State& u) {
  require_state(spec, u, "group_norms_sq");
  const auto& dec = spec.decomposition;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dec.m());
  for (int i = 0; i < spec.d(); ++i) b[dec.group_of(i)] += inner_h1(spec.grid, u[i], u[i], spec.V(i));
  return b;
}

double energy(const ProblemSpec& spec, const State& u) {
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  const Eigen::MatrixXd Q = pair_interactions(spec, u);
  return 0.5 * b.sum() - 0.25 * Q.sum();
}

State gradient(const ProblemSpec& spec, const State& u) {
  require_state(spec, u, "gradient");
  const int d = spec.d();
  State g;
  g.components.reserve(d);
  for (int i = 0; i < d; ++i) {
    Field gi = apply_laplacian(spec.grid, u[i]) + spec.V(i).cwiseProduct(u[i]);
    Field coupling = Field::Zero(spec.grid.n_interior());
    for (int j = 0; j < d; ++j) coupling += spec.beta(i, j).cwiseProduct(u[j]).cwiseProduct(u[j]);
    gi -= coupling.cwiseProduct(u[i]);
    g.components.push_back(std::move(gi));
  }
  return g;
}

double directional_derivative(const ProblemSpec& spec, const State& grad, const State& phi) {
  require_state(spec, grad, "directional_derivative");
  require_state(spec, phi, "directional_derivative");
  double s = 0.0;
  for (int i = 0; i < spec.d(); ++i) s += integrate(spec.grid, grad[i].cwiseProduct(phi[i]));
  return s;
}

Eigen::VectorXd nehari_residuals(const ProblemSpec& spec, const State& u) {
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  const InteractionMatrix M = interaction_matrix(spec, u);
  return b - M.entries.rowwise().sum();
}

double relative_nehari_residual(const ProblemSpec& spec, const State& u) {
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  const InteractionMatrix M = interaction_matrix(spec, u);
  const Eigen::VectorXd G = b - M.entries.rowwise().sum();
  double worst = 0.0;
  for (int h = 0; h < b.size(); ++h) {
    if (!(b[h] > 0.0)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(G[h]) / b[h]);
  }
  return worst;
}

bool on_nehari(const ProblemSpec& spec, const State& u, double tol) {
  return relative_nehari_residual(spec, u) <= tol;
}

EMembership is_in_E(const InteractionMatrix& M) {
  const Eigen::MatrixXd& A = M.entries;
  const int m = static_cast<int>(A.rows());
  EMembership out;
  out.margins.resize(m);
  out.inside = true;
  for (int h = 0; h < m; ++h) {
    double off = 0.0;
    for (int k = 0; k < m; ++k)
      if (k != h) off += std::abs(A(h, k));
    out.margins[h] = A(h, h) - off;
    if (!(out.margins[h] > 0.0)) out.inside = false;
  }
  return out;
}

EMembership is_in_E(const ProblemSpec& spec, const State& u) { return is_in_E(interaction_matrix(spec, u)); }

State group_direction(const ProblemSpec& spec, const State& u, int h) {
  require_state(spec, u, "group_direction");
  State e = State::zeros(spec);
  const auto& dec = spec.decomposition;
  for (int i = dec.group_begin(h); i < dec.group_end(h); ++i) e[i] = u[i];
  return e;
}

State scale_groups(const ProblemSpec& spec, const State& u, const Eigen::VectorXd& t) {
  require_state(spec, u, "scale_groups");
  if (t.size() != spec.m()) throw DimensionError("scale_groups: need one scale per group");
  State out = u;
  for (int i = 0; i < spec.d(); ++i) {
    const double th = t[spec.decomposition.group_of(i)];
    if (th < 0.0) throw ProblemError("scale_groups: scales must be nonnegative");
    out[i] *= std::sqrt(th);
  }
  return out;
}

double psi(const ProblemSpec& spec, const State& u, const Eigen::VectorXd& t) {
  if (t.size() != spec.m()) throw DimensionError("psi: need one entry per group");
  if ((t.array() < 0.0).any()) throw ProblemError("psi: t must be nonnegative");
  const Eigen::VectorXd b = group_norms_sq(spec, u);
  const Eigen::MatrixXd& M = interaction_matrix(spec, u).entries;
  return 0.5 * b.dot(t) - 0.25 * t.dot(M * t);
}

const char* to_string(PsiStatus status) {
  switch (status) {
    case PsiStatus::Interior: return "interior";
    case PsiStatus::Boundary: return "boundary";
    case PsiStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

bool strictly_copositive(const Eigen::MatrixXd& M) {
  const int m = static_cast<int>(M.rows());
  if (m > kMaxGroups) throw ProblemError("strictly_copositive: at most 8 groups supported");
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const auto s = support_of(mask, m);
    const Eigen::MatrixXd sub = principal(M, s);
    const double tol = 1e-12 * std::max(trace_scale(sub), std::numeric_limits<double>::min());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
    for (int k = 0; k < sub.rows(); ++k) {
      if (eig.eigenvalues()[k] > tol) continue;
      const Eigen::VectorXd v = eig.eigenvectors().col(k);
      if ((v.array() > 0.0).all() || (v.array() < 0.0).all()) return false;
    }
  }
  return true;
}

PsiMaximum maximize_quadratic_orthant(const Eigen::MatrixXd& M, const Eigen::VectorXd& b) {
  const int m = static_cast<int>(b.size());
  if (m > kMaxGroups) throw ProblemError("maximize_psi: at most 8 groups supported");
  if (M.rows() != m || M.cols() != m) throw DimensionError("maximize_psi: matrix and vector sizes differ");
  if (!(b.array() > 0.0).all()) throw ProjectionError("maximize_psi: every group norm must be positive");

  PsiMaximum best;
  if (!strictly_copositive(M)) {
    best.status = PsiStatus::Unbounded;
    best.t = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
    best.value = std::numeric_limits<double>::infinity();
    return best;
  }

  bool found = false;
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const auto s = support_of(mask, m);
    const int k = static_cast<int>(s.size());
    const Eigen::MatrixXd sub = principal(M, s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().cwiseAbs().minCoeff() <= 1e-12 * trace_scale(sub)) continue;
    Eigen::VectorXd bs(k);
    for (int a = 0; a < k; ++a) bs[a] = b[s[a]];
    const Eigen::VectorXd ts = sub.fullPivLu().solve(bs);
    if (!(ts.array() > 0.0).all()) continue;
    Eigen::VectorXd t = Eigen::VectorXd::Zero(m);
    for (int a = 0; a < k; ++a) t[s[a]] = ts[a];
    // KKT off the support: d Psi / d t_h = 1/2 (b - M t)_h <= 0.
    const Eigen::VectorXd slope = 0.5 * (b - M * t);
    bool kkt = true;
    for (int h = 0; h < m && kkt; ++h) {
      if (mask & (1u << h)) continue;
      if (slope[h] > 1e-12 * b[h]) kkt = false;
    }
    if (!kkt) continue;
    const double value = 0.5 * b.dot(t) - 0.25 * t.dot(M * t);
    if (!found || value > best.value) {
      found = true;
      best.value = value;
      best.t = t;
      best_mask = mask;
    }
  }
  if (!found) throw ProjectionError("maximize_psi: no KKT point found on the orthant");
  best.status = best_mask == (1u << m) - 1 ? PsiStatus::Interior : PsiStatus::Boundary;
  return best;
}

PsiMaximum maximize_psi(const ProblemSpec& spec, const State& u) {
  return maximize_quadratic_orthant(interaction_matrix(spec, u).entries, group_norms_sq(spec, u));
}

State project_to_nehari(const ProblemSpec& spec, const State& u, PsiMaximum& scaling) {
  scaling = maximize_psi(spec, u);
  if (scaling.status == PsiStatus::Unbounded) throw ProjectionError("project_to_nehari: Psi is unbounded above");
  if (scaling.status == PsiStatus::Boundary) {
    throw ProjectionError("project_to_nehari: the maximizer of Psi switches a group off");
  }
  return scale_groups(spec, u, scaling.t);
}

State project_to_nehari(const ProblemSpec& spec, const State& u) {
  PsiMaximum scaling;
  return project_to_nehari(spec, u, scaling);
}

Eigen::VectorXd constraint_differential(const ProblemSpec& spec, const State& u, const State& phi) {
  require_state(spec, u, "constraint_differential");
  require_state(spec, phi, "constraint_differential");
  const auto& dec = spec.decomposition;
  const int d = spec.d();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dec.m());
  for (int i = 0; i < d; ++i) {
    const int h = dec.group_of(i);
    out[h] += 2.0 * inner_h1(spec.grid, u[i], phi[i], spec.V(i));
    for (int j = 0; j < d; ++j) {
      const Field uij = spec.beta(i, j).cwiseProduct(u[i]).cwiseProduct(u[j]);
      out[h] -= 2.0 * integrate(spec.grid, uij.cwiseProduct(u[i].cwiseProduct(phi[j]) + phi[i].cwiseProduct(u[j])));
    }
  }
  return out;
}

State tangent_project(const ProblemSpec& spec, const State& u, const State& w) {
  const int m = spec.m();
  std::vector<State> directions;
  directions.reserve(m);
  Eigen::MatrixXd A(m, m);
  for (int k = 0; k < m; ++k) {
    directions.push_back(group_direction(spec, u, k));
    A.col(k) = constraint_differential(spec, u, directions.back());
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(lu.rcond() > 1e-13)) {
    throw NotInEError("tangent_project: constraint system is singular; the state is not in E_B");
  }
  const Eigen::VectorXd c = lu.solve(constraint_differential(spec, u, w));
  State v = w;
  for (int k = 0; k < m; ++k) v += (-c[k]) * directions[k];
  return v;
}

}  // namespace cnls
