#pragma once

#include <Eigen/Dense>
#include <vector>

namespace backstep {

// The cascade plant: ODE  X' = AX + B u_x(0,t)  driven by the boundary flux
// of a reaction-diffusion field  u_t = u_xx + lambda u  on (0,l), actuated by
// a flux jump at the interior point xi, with u continuous at xi and
// homogeneous Dirichlet conditions at 0 and l.
struct PlantSpec {
  Eigen::MatrixXd A;   // n x n
  Eigen::VectorXd B;   // n x 1
  double lambda = 0.0; // reaction coefficient, >= 0
  double l = 1.0;      // domain length, > 0
  double xi = 0.5;     // actuator location, 0 < xi < l

  int n() const { return static_cast<int>(A.rows()); }
};

// Controllability matrix [B, AB, ..., A^{n-1}B].
Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& B);

// Throws NotControllable / BadGeometry / BadDimension; returns spec unchanged.
PlantSpec validate_plant(const PlantSpec& spec);

// Spatial grid: uniform spacing per subinterval, xi an exact node.
struct Grid {
  std::vector<double> nodes; // ascending, nodes[0]=0, nodes[index_xi]=xi, nodes.back()=l
  int index_xi = 0;
  double h1 = 0.0; // spacing on [0, xi]
  double h2 = 0.0; // spacing on [xi, l]

  int n1() const { return index_xi; }                                 // cells on [0, xi]
  int n2() const { return static_cast<int>(nodes.size()) - 1 - index_xi; } // cells on [xi, l]
  int node_count() const { return static_cast<int>(nodes.size()); }
  double l() const { return nodes.back(); }
  double xi() const { return nodes[index_xi]; }
};

Grid build_grid(double l, double xi, double target_h);

// State of the cascade: ODE vector plus the field on each subinterval.
// u1 lives on nodes 0..index_xi, u2 on nodes index_xi..last; they share the
// xi node (continuity) and vanish at 0 and l.
struct CascadeState {
  Eigen::VectorXd X;
  Eigen::VectorXd u1; // size n1()+1
  Eigen::VectorXd u2; // size n2()+1
  double t = 0.0;
};

// State of the transformed (target) system: Hurwitz ODE cascaded with the
// pure heat field w on the full grid.  w1_xi / w2_xi keep the two one-sided
// transform values at xi before they are packed into the single w node.
struct TargetState {
  Eigen::VectorXd X;
  Eigen::VectorXd w; // size node_count()
  double w1_xi = 0.0;
  double w2_xi = 0.0;
  double t = 0.0;
};

CascadeState zero_state(const Grid& grid, int n);
TargetState zero_target(const Grid& grid, int n);

// Checks the CascadeState invariants (sizes, Dirichlet ends, continuity at xi).
void validate_state(const CascadeState& state, const Grid& grid, int n,
                    double tol = 1e-12);

// sqrt(|X|^2 + ||u1||^2_{L2} + ||u2||^2_{L2}), trapezoid quadrature.
double norm_H(const CascadeState& state, const Grid& grid);
double norm_H(const TargetState& state, const Grid& grid);

// norm_H plus first-derivative energy (discrete H1), one-sided second-order
// stencils at 0, xi-, xi+, l and central differences inside.
double norm_Y(const CascadeState& state, const Grid& grid);
double norm_Y(const TargetState& state, const Grid& grid);

// L2 norm of a field sampled on a uniform grid with spacing h (trapezoid).
double field_l2(const Eigen::VectorXd& v, double h);

// Sampled derivative of a uniform-grid field: central inside, one-sided
// second-order at the two ends.  Needs at least 3 samples.
Eigen::VectorXd field_derivative(const Eigen::VectorXd& v, double h);

}  // namespace backstep
