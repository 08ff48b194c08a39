#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "backstep/gains.hpp"
#include "backstep/plant.hpp"

namespace backstep {

// Hyperbolic Goursat problem in characteristic coordinates:
//   G_{zeta eta} = c G  on the triangle {0 <= eta <= zeta <= 2*zeta_max - eta,
//   zeta <= zeta_max ... },
// with diagonal data G(eta,eta) = gamma(eta) and edge data G(zeta,0) = delta0(zeta).
struct GoursatProblem {
  double c = 0.0;                              // coefficient (lambda/4)
  std::function<double(double)> gamma;         // diagonal data
  std::function<double(double)> delta0;        // edge data
  double extent = 0.0;                         // eta bound; zeta runs to 2*extent
};

// Solution samples of a Goursat problem on the characteristic grid
// {(zeta_i, eta_j) : zeta = i*h, eta = j*h, j <= min(i, 2J - i)}, J = zeta_max/h.
struct GoursatSolution {
  double h = 0.0;
  int j_max = 0;                  // eta index bound (zeta runs to 2*j_max)
  Eigen::MatrixXd G;              // (2*j_max+1) x (j_max+1); zero outside domain
  int iterations = 0;
  std::vector<double> increments; // measured max|Delta G^n| per iteration
  std::vector<double> bounds;     // analytic factorial majorant per iteration

  bool in_domain(int i, int j) const {
    return j >= 0 && i >= j && j <= 2 * j_max - i && i <= 2 * j_max;
  }
};

// Successive approximations on the equivalent integral equation
//   G^{n+1}(zeta,eta) = gamma(eta) + delta0(zeta) - delta0(eta)
//                       + c * int_eta^zeta int_0^eta G^n(t,s) ds dt,
// trapezoid quadrature, stopping when BOTH the measured increment and the
// factorial majorant fall below tail_tol.  Iteration cap 200.
GoursatSolution solve_goursat(const GoursatProblem& p, double h, double tail_tol);

// Power series for Psi(z) := I1(sqrt z)/sqrt z = (1/2) sum_m (z/4)^m / (m!(m+1)!),
// entire, Psi(0) = 1/2.  Throws NegativeArgument for z < 0.
double psi(double z);

// Closed-form right kernel  k2(x,y) = lambda (l-y) Psi(lambda((l-x)^2 - (l-y)^2))
// on the triangle {xi <= x <= y <= l}; k2(x,x) = lambda(l-x)/2, k2(x,l) = 0.
double k2_eval(const PlantSpec& plant, double x, double y);

enum class KernelKind { k1, k2 };

// A kernel sampled on its triangular domain with uniform spacing h:
//   k1 on {0 <= y <= x <= xi}:      values(i,j) = k1(i*h, j*h), j <= i
//   k2 on {xi <= x <= y <= l}:      values(i,j) = k2(xi+i*h, xi+j*h), j >= i
// Entries outside the triangle are zero and never read.
struct KernelGrid {
  KernelKind which = KernelKind::k1;
  double x0 = 0.0;        // coordinate of index 0 (0 for k1, xi for k2)
  double h = 0.0;
  int n = 0;              // index of the last node (extent = n*h)
  Eigen::MatrixXd values; // (n+1) x (n+1)
  int iterations = 0;     // successive-approximation iterations (0 = closed form)
  double tail_bound = 0.0;
  std::vector<double> increments; // per-iteration measured max|Delta G^n|
  std::vector<double> bounds;     // matching factorial majorant values

  double x_of(int i) const { return x0 + i * h; }
};

// Left kernel via the Goursat change of variables zeta = x+y, eta = x-y:
// G_{zeta eta} = (lambda/4) G, G(eta,eta) = -phi(eta)B, G(zeta,0) = -lambda zeta/4,
// then k1(x,y) = G(x+y, x-y) on {0 <= y <= x <= xi}.
KernelGrid solve_k1(const PlantSpec& plant, const PhiFunction& pf, double h,
                    double tail_tol);

// Samples k2_eval on its triangle with spacing h = (l-xi)/round((l-xi)/h_target).
KernelGrid sample_k2(const PlantSpec& plant, double h_target);

// Runs the generic Goursat iterator on k2's problem in reflected coordinates
// (s = l-x, t = l-y): gamma == 0, delta0(zeta) = lambda zeta / 4.  Used as a
// cross-oracle against the closed form.
KernelGrid solve_k2_iterative(const PlantSpec& plant, double h, double tail_tol);

struct KernelResidual {
  double interior = 0.0; // max |k_xx - k_yy - lambda k| at interior triangle nodes
  double boundary = 0.0; // max violation of the diagonal/edge data
};

// Second-order finite-difference residual check of the kernel PDE and its
// boundary conditions.  For k1 the edge data needs phi (pass pf); for k2 pass
// nullptr.
KernelResidual kernel_residual(const KernelGrid& kg, const PlantSpec& plant,
                               const PhiFunction* pf = nullptr);

// One-sided second-order d/dx of the kernel at the actuator line x = xi,
// sampled in y over the kernel's own grid (k1: y in [0,xi]; k2: y in [xi,l]).
// Columns too close to the triangle tip use quadratic extrapolation.
Eigen::VectorXd kernel_dx_at_interface(const KernelGrid& kg);

}  // namespace backstep
