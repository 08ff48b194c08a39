#include "backstep/plant.hpp"

#include <cmath>

#include "backstep/errors.hpp"

namespace backstep {

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& B) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd C(n, n);
  Eigen::VectorXd col = B;
  for (int k = 0; k < n; ++k) {
    C.col(k) = col;
    col = A * col;
  }
  return C;
}

PlantSpec validate_plant(const PlantSpec& spec) {
  const int n = spec.n();
  if (n < 1 || spec.A.cols() != n)
    throw BadDimension("A must be square and nonempty");
  if (spec.B.size() != n)
    throw BadDimension("B must be n x 1");
  if (!(spec.l > 0.0) || !(spec.xi > 0.0) || !(spec.xi < spec.l))
    throw BadGeometry("need 0 < xi < l and l > 0");
  if (spec.lambda < 0.0)
    throw BadGeometry("lambda must be >= 0");

  const Eigen::MatrixXd C = controllability_matrix(spec.A, spec.B);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  const double smax = svd.singularValues()(0);
  const double tol = std::max(smax, 1.0) * n * 1e-12;
  if (svd.singularValues()(n - 1) <= tol)
    throw NotControllable("controllability matrix rank < n");
  return spec;
}

Grid build_grid(double l, double xi, double target_h) {
  if (!(l > 0.0) || !(xi > 0.0) || !(xi < l))
    throw BadGeometry("need 0 < xi < l");
  if (!(target_h > 0.0))
    throw BadGeometry("target_h must be > 0");

  const int n1 = std::max(2, static_cast<int>(std::lround(xi / target_h)));
  const int n2 = std::max(2, static_cast<int>(std::lround((l - xi) / target_h)));

  Grid g;
  g.index_xi = n1;
  g.h1 = xi / n1;
  g.h2 = (l - xi) / n2;
  g.nodes.resize(n1 + n2 + 1);
  for (int i = 0; i < n1; ++i) g.nodes[i] = i * g.h1;
  g.nodes[n1] = xi; // exact by construction
  for (int j = 1; j < n2; ++j) g.nodes[n1 + j] = xi + j * g.h2;
  g.nodes[n1 + n2] = l;
  return g;
}

CascadeState zero_state(const Grid& grid, int n) {
  CascadeState s;
  s.X = Eigen::VectorXd::Zero(n);
  s.u1 = Eigen::VectorXd::Zero(grid.n1() + 1);
  s.u2 = Eigen::VectorXd::Zero(grid.n2() + 1);
  return s;
}

TargetState zero_target(const Grid& grid, int n) {
  TargetState s;
  s.X = Eigen::VectorXd::Zero(n);
  s.w = Eigen::VectorXd::Zero(grid.node_count());
  return s;
}

void validate_state(const CascadeState& state, const Grid& grid, int n,
                    double tol) {
  if (state.X.size() != n) throw BadDimension("X has wrong size");
  if (state.u1.size() != grid.n1() + 1 || state.u2.size() != grid.n2() + 1)
    throw GridMismatch("field sample counts do not match the grid");
  if (std::abs(state.u1(0)) > tol || std::abs(state.u2(grid.n2())) > tol)
    throw BadGeometry("Dirichlet end conditions violated");
  if (std::abs(state.u1(grid.n1()) - state.u2(0)) > tol)
    throw BadGeometry("field is discontinuous at xi");
}

double field_l2(const Eigen::VectorXd& v, double h) {
  const int m = static_cast<int>(v.size());
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    const double w = (i == 0 || i == m - 1) ? 0.5 : 1.0;
    s += w * v(i) * v(i);
  }
  return std::sqrt(h * s);
}

Eigen::VectorXd field_derivative(const Eigen::VectorXd& v, double h) {
  const int m = static_cast<int>(v.size());
  if (m < 3) throw BadDimension("need at least 3 samples to differentiate");
  Eigen::VectorXd d(m);
  d(0) = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
  for (int i = 1; i < m - 1; ++i) d(i) = (v(i + 1) - v(i - 1)) / (2.0 * h);
  d(m - 1) = (3.0 * v(m - 1) - 4.0 * v(m - 2) + v(m - 3)) / (2.0 * h);
  return d;
}

namespace {

double norm_H_sq(const Eigen::VectorXd& X, const Eigen::VectorXd& u1,
                 const Eigen::VectorXd& u2, const Grid& grid) {
  const double a = field_l2(u1, grid.h1);
  const double b = field_l2(u2, grid.h2);
  return X.squaredNorm() + a * a + b * b;
}

double deriv_energy(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                    const Grid& grid) {
  const double a = field_l2(field_derivative(u1, grid.h1), grid.h1);
  const double b = field_l2(field_derivative(u2, grid.h2), grid.h2);
  return a * a + b * b;
}

}  // namespace

double norm_H(const CascadeState& state, const Grid& grid) {
  return std::sqrt(norm_H_sq(state.X, state.u1, state.u2, grid));
}

double norm_Y(const CascadeState& state, const Grid& grid) {
  return std::sqrt(norm_H_sq(state.X, state.u1, state.u2, grid) +
                   deriv_energy(state.u1, state.u2, grid));
}

namespace {

// Split the packed field into its two subinterval restrictions (shared xi node).
void split_field(const Eigen::VectorXd& w, const Grid& grid,
                 Eigen::VectorXd& w1, Eigen::VectorXd& w2) {
  w1 = w.head(grid.n1() + 1);
  w2 = w.tail(grid.n2() + 1);
}

}  // namespace

double norm_H(const TargetState& state, const Grid& grid) {
  Eigen::VectorXd w1, w2;
  split_field(state.w, grid, w1, w2);
  return std::sqrt(norm_H_sq(state.X, w1, w2, grid));
}

double norm_Y(const TargetState& state, const Grid& grid) {
  Eigen::VectorXd w1, w2;
  split_field(state.w, grid, w1, w2);
  return std::sqrt(norm_H_sq(state.X, w1, w2, grid) + deriv_energy(w1, w2, grid));
}

}  // namespace backstep
