#pragma once

#include <cstdint>

#include "backstep/gains.hpp"
#include "backstep/kernels.hpp"
#include "backstep/plant.hpp"

namespace backstep {

// Everything the feedback law and the transform need, synthesized once for a
// given plant and grid.  Kernel grids are sampled at the simulation grid's own
// spacings so quadrature nodes coincide with field nodes.
struct GainSet {
  PlantSpec plant;
  Grid grid;
  StabilizingGain gain;
  PhiFunction pf;
  KernelGrid k1;            // on {0 <= y <= x <= xi}, h = grid.h1
  KernelGrid k2;            // on {xi <= x <= y <= l}, h = grid.h2 (closed form)
  Eigen::MatrixXd phi_rows; // (n1+1) x n, phi at the left-subinterval nodes
  Eigen::RowVectorXd phi_prime_xi;
  Eigen::VectorXd dk1_xi;   // d k1/dx (xi, y) at left nodes
  Eigen::VectorXd dk2_xi;   // d k2/dx (xi, y) at right nodes
  double k1_xixi = 0.0;
  double k2_xixi = 0.0;
  int feedback_sign = +1;   // sign of the k2 integral in the feedback law
  std::uint64_t fingerprint = 0;
};

std::uint64_t state_fingerprint(const PlantSpec& plant, const Grid& grid);

// Builds the full gain set: pole placement, gain function, both kernels and
// the interface derivative samples.  tail_tol bounds the kernel iteration tail.
GainSet synthesize_gains(const PlantSpec& plant, const Grid& grid,
                         const std::vector<std::complex<double>>& poles,
                         double tail_tol = 1e-10, int feedback_sign = +1);

// Forward map: w1 = u1 - int_0^x k1(x,y)u1(y)dy + phi(x)X on [0,xi],
//              w2 = u2 + int_x^l k2(x,y)u2(y)dy on [xi,l];
// w1, w2 are packed into one field (the xi node stores the left value) and the
// two one-sided values at xi are kept in w1_xi / w2_xi.
TargetState forward_transform(const CascadeState& state, const GainSet& g);

// Exact inverse of the discrete forward map: lower-triangular substitution on
// [0,xi], upper-triangular substitution on (xi,l], continuity at xi restores
// u2(xi) = u1(xi).
CascadeState inverse_transform(const TargetState& ts, const GainSet& g);

// Pointwise feedback: U = (k1(xi,xi) - k2(xi,xi)) u(xi)
//   + int_0^xi dk1/dx(xi,y) u1 dy + sign * int_xi^l dk2/dx(xi,y) u2 dy
//   - phi'(xi) X,  with sign = g.feedback_sign.
double feedback_control(const CascadeState& state, const GainSet& g);

struct InterfaceGap {
  double value_gap = 0.0;
  double slope_gap = 0.0;
};

// Interface smoothness of a transformed state: value gap from the stored
// one-sided transform values, slope gap from one-sided second-order stencils.
InterfaceGap interface_gap(const TargetState& ts, const Grid& grid);

struct CompatibilityResult {
  double c1 = 0.0; // transformed-value mismatch at xi
  double c2 = 0.0; // flux-jump mismatch: |u1'(xi-) - u2'(xi+) - U(0)|
  bool pass = false;
};

// Initial-data compatibility conditions for classical solutions.
CompatibilityResult check_compatibility(const CascadeState& state0,
                                        const GainSet& g, double tol);

// Builds compatible initial data: inverse-transforms the smooth target profile
// w0 (sampled on the grid, zero at both ends) and shifts the ODE state along
// one coordinate direction so the field is exactly continuous at xi.
CascadeState compatible_state(const Eigen::VectorXd& w0, const GainSet& g,
                              const Eigen::VectorXd& X0_base);

}  // namespace backstep
