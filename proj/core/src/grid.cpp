#include "cnls/grid.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "cnls/errors.hpp"

namespace cnls {

namespace {

void require_size(const Grid& g, const Field& f, const char* what) {
  if (f.size() != g.n_interior()) {
    throw DimensionError(std::string(what) + ": field has " + std::to_string(f.size()) +
                         " entries, grid has " + std::to_string(g.n_interior()) + " interior nodes");
  }
}

// Edge differences (D u)_e = s_{e+1} u_{e+1} - s_e u_e, e = 0..n, with zero boundary values.
Field edge_differences(const Grid& g, const Field& u) {
  const int n = g.n_interior();
  const Field& s = g.node_scales();
  Field du(n + 1);
  for (int e = 0; e <= n; ++e) {
    const double right = e < n ? s[e + 1] * u[e] : 0.0;
    const double left = e > 0 ? s[e] * u[e - 1] : 0.0;
    du[e] = right - left;
  }
  return du;
}

// Symmetric tridiagonal K = W (L + V): diagonal and super-diagonal.
void assemble_symmetric(const Grid& g, const Field& potential, Field& diag, Field& off) {
  const int n = g.n_interior();
  const double h = g.spacing();
  const Field& c = g.edge_coefficients();
  const Field& s = g.node_scales();
  const Field& w = g.weights();
  diag.resize(n);
  off.resize(n > 0 ? n - 1 : 0);
  for (int k = 1; k <= n; ++k) {
    diag[k - 1] = s[k] * s[k] * (c[k - 1] + c[k]) / h + w[k - 1] * potential[k - 1];
    if (k < n) off[k - 1] = -s[k] * c[k] * s[k + 1] / h;
  }
}

Field smooth_positive_start(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(0.0, 1.0);
  const int n = g.n_interior();
  const double size = g.size();
  Field u = Field::Zero(n);
  for (int mode = 1; mode <= 4; ++mode) {
    const double a = (mode == 1 ? 0.5 + coef(rng) : coef(rng)) / mode;
    for (int k = 0; k < n; ++k) {
      const double x = g.nodes()[k];
      const double arg = g.kind() == GridKind::Interval
                             ? mode * std::numbers::pi * x / size
                             : (mode - 0.5) * std::numbers::pi * x / size;
      u[k] += a * (g.kind() == GridKind::Interval ? std::sin(arg) : std::cos(arg));
    }
  }
  return u.cwiseAbs();
}

}  // namespace

Grid Grid::interval(double length, int n_interior) {
  if (!(length > 0.0) || !std::isfinite(length)) throw ProblemError("grid: interval length must be positive");
  if (n_interior < 3) throw ProblemError("grid: need at least 3 interior nodes");
  Grid g;
  g.kind_ = GridKind::Interval;
  g.size_ = length;
  g.dimension_ = 1;
  g.n_ = n_interior;
  g.spacing_ = length / (n_interior + 1);
  g.angular_ = 1.0;
  g.nodes_.resize(n_interior);
  for (int k = 0; k < n_interior; ++k) g.nodes_[k] = (k + 1) * g.spacing_;
  g.weights_ = Field::Constant(n_interior, g.spacing_);
  g.build_edges();
  return g;
}

Grid Grid::radial_ball(double radius, int dimension, int n_interior) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ProblemError("grid: radius must be positive");
  if (dimension < 1 || dimension > 3) throw ProblemError("grid: radial dimension must be 1, 2 or 3");
  if (n_interior < 3) throw ProblemError("grid: need at least 3 interior nodes");
  Grid g;
  g.kind_ = GridKind::RadialBall;
  g.size_ = radius;
  g.dimension_ = dimension;
  g.n_ = n_interior;
  // N = 1 is cell centred (r_k = (k - 1/2) h) so the edge to the mirror node is exactly flux-free.
  const double offset = dimension == 1 ? 0.5 : 0.0;
  g.spacing_ = radius / (n_interior + 1 - offset);
  g.angular_ = dimension == 1 ? 2.0 : (dimension == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi);
  g.nodes_.resize(n_interior);
  g.weights_.resize(n_interior);
  for (int k = 0; k < n_interior; ++k) {
    const double r = (k + 1 - offset) * g.spacing_;
    g.nodes_[k] = r;
    g.weights_[k] = g.spacing_ * std::pow(r, dimension - 1);
  }
  g.build_edges();
  return g;
}

void Grid::build_edges() {
  const double h = spacing_;
  edge_coef_.resize(n_ + 1);
  scales_ = Field::Ones(n_ + 2);
  if (kind_ == GridKind::Interval) {
    edge_coef_.setOnes();
    return;
  }
  if (dimension_ == 3) {
    edge_coef_.setOnes();
    for (int k = 0; k <= n_ + 1; ++k) scales_[k] = k * h;
    return;
  }
  // Flux form; the edge through the centre joins u(r_1) with its mirror image and is flux-free.
  edge_coef_[0] = 0.0;
  for (int e = 1; e <= n_; ++e) edge_coef_[e] = std::pow((e + 0.5) * h, dimension_ - 1);
}

bool Grid::same_as(const Grid& other) const {
  return kind_ == other.kind_ && dimension_ == other.dimension_ && n_ == other.n_ && size_ == other.size_;
}

Field constant_field(const Grid& g, double value) { return Field::Constant(g.n_interior(), value); }

Field apply_laplacian(const Grid& g, const Field& u) {
  require_size(g, u, "apply_laplacian");
  const int n = g.n_interior();
  const double h = g.spacing();
  const Field& c = g.edge_coefficients();
  const Field& s = g.node_scales();
  const Field& w = g.weights();
  const Field du = edge_differences(g, u);
  Field out(n);
  for (int k = 1; k <= n; ++k) out[k - 1] = s[k] * (c[k - 1] * du[k - 1] - c[k] * du[k]) / (h * w[k - 1]);
  return out;
}

double integrate(const Grid& g, const Field& f) {
  require_size(g, f, "integrate");
  return g.angular_factor() * g.weights().dot(f);
}

double stiffness(const Grid& g, const Field& u, const Field& v) {
  require_size(g, u, "stiffness");
  require_size(g, v, "stiffness");
  const Field du = edge_differences(g, u);
  const Field dv = edge_differences(g, v);
  return g.angular_factor() * (g.edge_coefficients().array() * du.array() * dv.array()).sum() / g.spacing();
}

double inner_h1(const Grid& g, const Field& u, const Field& v, const Field& potential) {
  require_size(g, potential, "inner_h1");
  return stiffness(g, u, v) + integrate(g, potential.cwiseProduct(u).cwiseProduct(v));
}

double inner_h1(const Grid& g, const Field& u, const Field& v, double potential) {
  return stiffness(g, u, v) + potential * integrate(g, u.cwiseProduct(v));
}

double norm_l4_sq(const Grid& g, const Field& u) {
  const Field u2 = u.cwiseProduct(u);
  return std::sqrt(std::max(0.0, integrate(g, u2.cwiseProduct(u2))));
}

Field solve_shifted_laplacian(const Grid& g, const Field& potential, const Field& rhs) {
  require_size(g, potential, "solve_shifted_laplacian");
  require_size(g, rhs, "solve_shifted_laplacian");
  const int n = g.n_interior();
  Field diag, off;
  assemble_symmetric(g, potential, diag, off);
  // Thomas elimination on the symmetric positive definite system K x = W rhs.
  Field b = g.weights().cwiseProduct(rhs);
  Field cprime(n), x(n);
  double denom = diag[0];
  cprime[0] = n > 1 ? off[0] / denom : 0.0;
  b[0] /= denom;
  for (int k = 1; k < n; ++k) {
    denom = diag[k] - off[k - 1] * cprime[k - 1];
    if (k < n - 1) cprime[k] = off[k] / denom;
    b[k] = (b[k] - off[k - 1] * b[k - 1]) / denom;
  }
  x[n - 1] = b[n - 1];
  for (int k = n - 2; k >= 0; --k) x[k] = b[k] - cprime[k] * x[k + 1];
  return x;
}

SobolevResult sobolev_constant(const Grid& g, const std::optional<Field>& zero_order,
                               const SobolevOptions& options) {
  const int n = g.n_interior();
  const Field potential = zero_order ? *zero_order : Field::Zero(n);
  require_size(g, potential, "sobolev_constant");
  if ((potential.array() < 0.0).any()) throw ProblemError("sobolev_constant: zero-order term must be nonnegative");

  auto energy_norm = [&](const Field& u) { return inner_h1(g, u, u, potential); };
  auto quotient = [&](const Field& u) { return energy_norm(u) / norm_l4_sq(g, u); };
  auto normalize = [&](Field u) { return Field(u / std::sqrt(energy_norm(u))); };

  std::mt19937_64 rng(options.seed);
  SobolevResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int start = 0; start < std::max(1, options.starts); ++start) {
    Field u = smooth_positive_start(g, rng);
    u = normalize(u);
    double q = quotient(u);
    double step = 1.0;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iters; ++it) {
      // H^1 gradient of the quotient at a(u,u) = 1: (2/N)(u - A^{-1}(u^3)/N^2), N = |u|_4^2.
      const double l4 = norm_l4_sq(g, u);
      const Field cubic = u.cwiseProduct(u).cwiseProduct(u);
      const Field grad = (2.0 / l4) * (u - solve_shifted_laplacian(g, potential, cubic) / (l4 * l4));
      const double slope = energy_norm(grad);
      if (slope <= options.tolerance * options.tolerance * q * q) {
        converged = true;
        break;
      }
      double trial_q = q;
      Field trial;
      step = std::min(1.0, 2.0 * step);
      for (int bt = 0; bt < 60; ++bt) {
        trial = normalize(u - step * grad);
        trial_q = quotient(trial);
        if (trial_q <= q - 1e-4 * step * slope) break;
        step *= 0.5;
      }
      if (!(trial_q < q)) {
        converged = true;
        break;
      }
      const double change = (q - trial_q) / q;
      u = trial;
      q = trial_q;
      if (change < options.tolerance * 1e-4) {
        converged = true;
        break;
      }
    }
    if (q < best.value) {
      best.value = q;
      best.converged = converged;
      best.iterations = it;
    }
  }
  return best;
}

}  // namespace cnls
