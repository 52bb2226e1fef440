#include "cnls/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "cnls/errors.hpp"

namespace cnls::oracle {

namespace {

double psi_value(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, const Eigen::VectorXd& t) {
  return 0.5 * b.dot(t) - 0.25 * t.dot(M * t);
}

// Visits every point of the tensor grid lo + step * {0..n}^m.
template <class F>
void for_each_grid_point(const Eigen::VectorXd& lo, const Eigen::VectorXd& step, int n, F&& f) {
  const int m = static_cast<int>(lo.size());
  std::vector<int> idx(m, 0);
  Eigen::VectorXd t(m);
  while (true) {
    for (int a = 0; a < m; ++a) t[a] = lo[a] + step[a] * idx[a];
    f(t);
    int a = 0;
    while (a < m && ++idx[a] > n) idx[a++] = 0;
    if (a == m) break;
  }
}

// Dense Dirichlet form a(u, v) = u^T K v, assembled directly from the grid geometry.
Eigen::MatrixXd dense_stiffness(const Grid& g) {
  const int n = g.n_interior();
  const double h = g.spacing();
  const double omega = g.angular_factor();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  if (g.kind() == GridKind::Interval) {
    for (int k = 0; k < n; ++k) {
      K(k, k) = 2.0 / h;
      if (k + 1 < n) K(k, k + 1) = K(k + 1, k) = -1.0 / h;
    }
  } else if (g.dimension() == 3) {
    // integral |u'|^2 r^2 dr = integral ((r u)')^2 dr for u vanishing at R.
    for (int k = 0; k < n; ++k) {
      const double r = g.nodes()[k];
      K(k, k) = 2.0 * r * r / h;
      if (k + 1 < n) K(k, k + 1) = K(k + 1, k) = -r * g.nodes()[k + 1] / h;
    }
  } else {
    const int p = g.dimension() - 1;
    for (int k = 0; k < n; ++k) {
      const double left = k == 0 ? 0.0 : std::pow(g.nodes()[k] - 0.5 * h, p);
      const double right = std::pow(g.nodes()[k] + 0.5 * h, p);
      K(k, k) = (left + right) / h;
      if (k + 1 < n) K(k, k + 1) = K(k + 1, k) = -right / h;
    }
  }
  return omega * K;
}

// Reduced functional F(u) = 1/4 b.M^{-1} b with its Euclidean nodal gradient.
class ReducedFunctional {
 public:
  ReducedFunctional(const ProblemSpec& spec, bool require_E)
      : spec_(spec), require_E_(require_E), K_(dense_stiffness(spec.grid)) {
    const Field w = spec.grid.angular_factor() * spec.grid.weights();
    for (int i = 0; i < spec.d(); ++i) A_.push_back(K_ + Eigen::MatrixXd(w.cwiseProduct(spec.V(i)).asDiagonal()));
    weights_ = w;
  }

  // Returns +inf when u is outside the admissible set.
  double value(const std::vector<Eigen::VectorXd>& u, Eigen::VectorXd* t_out = nullptr) const {
    const int d = spec_.d();
    const int m = spec_.m();
    const auto& dec = spec_.decomposition;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < d; ++i) b[dec.group_of(i)] += u[i].dot(A_[i] * u[i]);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        M(dec.group_of(i), dec.group_of(j)) +=
            integrate(spec_.grid, spec_.beta(i, j).cwiseProduct(u[i].cwiseAbs2()).cwiseProduct(u[j].cwiseAbs2()));
      }
    }
    if (!(b.array() > 0.0).all()) return std::numeric_limits<double>::infinity();
    if (require_E_) {
      for (int h = 0; h < m; ++h) {
        double off = 0.0;
        for (int k = 0; k < m; ++k)
          if (k != h) off += std::abs(M(h, k));
        if (!(M(h, h) > off)) return std::numeric_limits<double>::infinity();
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd t = llt.solve(b);
    if (!(t.array() > 0.0).all()) return std::numeric_limits<double>::infinity();
    if (t_out) *t_out = t;
    return 0.25 * b.dot(t);
  }

  std::vector<Eigen::VectorXd> grad(const std::vector<Eigen::VectorXd>& u, const Eigen::VectorXd& t) const {
    const int d = spec_.d();
    const auto& dec = spec_.decomposition;
    std::vector<Eigen::VectorXd> g(d);
    for (int i = 0; i < d; ++i) {
      const double ti = t[dec.group_of(i)];
      Eigen::VectorXd quartic = Eigen::VectorXd::Zero(u[i].size());
      for (int j = 0; j < d; ++j) quartic += t[dec.group_of(j)] * spec_.beta(i, j).cwiseProduct(u[j].cwiseAbs2());
      g[i] = ti * (A_[i] * u[i]) - ti * weights_.cwiseProduct(quartic).cwiseProduct(u[i]);
    }
    return g;
  }

 private:
  const ProblemSpec& spec_;
  bool require_E_;
  Eigen::MatrixXd K_;
  std::vector<Eigen::MatrixXd> A_;
  Eigen::VectorXd weights_;
};

}  // namespace

Eigen::VectorXd brute_force_psi_max(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, double T, int n_grid) {
  const int m = static_cast<int>(b.size());
  if (m < 1 || m > 3) throw ProblemError("brute_force_psi_max: supports 1 <= m <= 3");
  if (n_grid < 2 || !(T > 0.0)) throw ProblemError("brute_force_psi_max: need n_grid >= 2 and T > 0");

  Eigen::VectorXd best_t = Eigen::VectorXd::Zero(m);
  double best = psi_value(M, b, best_t);
  auto visit = [&](const Eigen::VectorXd& t) {
    const double v = psi_value(M, b, t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  };
  const double coarse = T / n_grid;
  for_each_grid_point(Eigen::VectorXd::Zero(m), Eigen::VectorXd::Constant(m, coarse), n_grid, visit);

  Eigen::VectorXd lo(m), step(m);
  for (int a = 0; a < m; ++a) {
    lo[a] = std::max(0.0, best_t[a] - coarse);
    const double hi = best_t[a] + coarse;
    step[a] = (hi - lo[a]) / n_grid;
  }
  for_each_grid_point(lo, step, n_grid, visit);
  return best_t;
}

State fd_gradient(const ProblemSpec& spec, const State& u, double eps) {
  State g = State::zeros(spec);
  State work = u;
  const double omega = spec.grid.angular_factor();
  for (int i = 0; i < spec.d(); ++i) {
    for (int k = 0; k < spec.grid.n_interior(); ++k) {
      const double saved = work[i][k];
      work[i][k] = saved + eps;
      const double plus = energy(spec, work);
      work[i][k] = saved - eps;
      const double minus = energy(spec, work);
      work[i][k] = saved;
      g[i][k] = (plus - minus) / (2.0 * eps) / (omega * spec.grid.weights()[k]);
    }
  }
  return g;
}

double fd_second(const ProblemSpec& spec, const State& u, const State& v, double eps) {
  const double center = energy(spec, u);
  const double plus = energy(spec, u + eps * v);
  const double minus = energy(spec, u + (-eps) * v);
  return (plus + minus - 2.0 * center) / (eps * eps);
}

double eig_min_sym(const Eigen::MatrixXd& M) {
  const int m = static_cast<int>(M.rows());
  if (M.cols() != m) throw DimensionError("eig_min_sym: matrix must be square");
  if (m < 1 || m > 16) throw ProblemError("eig_min_sym: supports 1 <= m <= 16");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw ProblemError("eig_min_sym: matrix is not symmetric");

  Eigen::MatrixXd A = 0.5 * (M + M.transpose());
  auto off_norm = [&] {
    double s = 0.0;
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q)
        if (p != q) s += A(p, q) * A(p, q);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < 100 && off_norm() > 1e-12 * scale; ++sweep) {
    for (int p = 0; p < m - 1; ++p) {
      for (int q = p + 1; q < m; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < m; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < m; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return A.diagonal().minCoeff();
}

GroundStateReference small_instance_ground_state(const ProblemSpec& spec, const ReferenceOptions& options) {
  const int n = spec.grid.n_interior();
  const int d = spec.d();
  if (n > 24) throw ProblemError("small_instance_ground_state: grid must have at most 24 nodes");
  if (d > 3) throw ProblemError("small_instance_ground_state: at most 3 components");

  const ReducedFunctional F(spec, options.require_E);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> node(0, n - 1);

  GroundStateReference best;
  best.energy = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<Eigen::VectorXd> u(d, Eigen::VectorXd::Zero(n));
    const bool windowed = r % 2 == 1;
    for (int i = 0; i < d; ++i) {
      int lo = 0, hi = n - 1;
      if (windowed) {
        lo = node(rng);
        hi = node(rng);
        if (lo > hi) std::swap(lo, hi);
      }
      for (int k = lo; k <= hi; ++k) u[i][k] = 0.05 + unit(rng);
    }
    Eigen::VectorXd t;
    double value = F.value(u, &t);
    if (!std::isfinite(value)) continue;

    double step = 1e-2;
    for (int it = 0; it < options.max_iters; ++it) {
      const auto g = F.grad(u, t);
      double gnorm2 = 0.0, unorm2 = 0.0;
      for (int i = 0; i < d; ++i) {
        gnorm2 += g[i].squaredNorm();
        unorm2 += u[i].squaredNorm();
      }
      if (gnorm2 <= 1e-24 * std::max(unorm2, 1e-300) * std::max(value * value, 1e-300)) break;
      bool moved = false;
      step *= 2.0;
      for (int bt = 0; bt < 50; ++bt, step *= 0.5) {
        std::vector<Eigen::VectorXd> trial = u;
        for (int i = 0; i < d; ++i) trial[i] -= step * g[i];
        Eigen::VectorXd t_trial;
        const double v_trial = F.value(trial, &t_trial);
        if (v_trial <= value - 1e-4 * step * gnorm2) {
          u = std::move(trial);
          t = t_trial;
          moved = value - v_trial > 1e-15 * value;
          value = v_trial;
          break;
        }
      }
      if (!moved) break;
    }
    ++best.feasible_restarts;
    if (value < best.energy) {
      best.energy = value;
      best.state.components.assign(d, Field());
      for (int i = 0; i < d; ++i) best.state[i] = std::sqrt(t[spec.decomposition.group_of(i)]) * u[i];
    }
  }
  return best;
}

}  // namespace cnls::oracle
