#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "backstep/plant.hpp"
#include "backstep/transform.hpp"

namespace backstep {

enum class Scheme { implicit_euler, crank_nicolson };

struct SimConfig {
  double dt = 1e-4;
  double T = 2.0;
  Scheme scheme = Scheme::crank_nicolson;
  Grid grid;
  int record_every = 100;
};

// Recorded trajectory.  Plant simulations fill `states`; target simulations
// fill `tstates`.  V is filled by the analysis module.
struct SimTrace {
  Grid grid;
  std::vector<double> times;
  std::vector<CascadeState> states;
  std::vector<TargetState> tstates;
  std::vector<double> controls;
  std::vector<double> normH;
  std::vector<double> normY;
  std::vector<double> V;
};

// Method of lines with an algebraic interface row at xi: 3-point Laplacian
// plus lambda*u inside each subinterval, ODE row X' = AX + B u_x(0+), and the
// flux-jump constraint  u_x(xi-) - u_x(xi+) = U(t)  via one-sided second-order
// differences.  Theta scheme in time (Crank-Nicolson or implicit Euler) with
// the control evaluated at the known time level.
SimTrace simulate_closed_loop(const PlantSpec& plant, const GainSet& gains,
                              const CascadeState& state0, const SimConfig& cfg);

// Same discretization with U == 0 (growth expected for lambda > pi^2/l^2).
SimTrace simulate_open_loop(const PlantSpec& plant, const CascadeState& state0,
                            const SimConfig& cfg);

// Target system: pure heat field (no reaction) with slope continuity at xi,
// cascaded with the Hurwitz ODE X' = (A+BK)X + B w_x(0+).
SimTrace simulate_target(const PlantSpec& plant, const Eigen::RowVectorXd& K,
                         const TargetState& ts0, const SimConfig& cfg);

// Truncated Fourier solution of the target heat field:
//   w(x,t) = (2/l) sum_k e^{-k^2 pi^2 t / l^2} sin(k pi x / l) *
//            int_0^l w0(s) sin(k pi s / l) ds,
// coefficients by trapezoid quadrature on the grid.
double exact_target_solution(const Eigen::VectorXd& w0, const Grid& grid,
                             double x, double t, int modes = 100);

// X(t) = e^{t Acl} X0 + int_0^t e^{(t-tau) Acl} B w1x0(tau) dtau by composite
// trapezoid, with Acl = A + BK.
Eigen::VectorXd duhamel_X(const PlantSpec& plant, const Eigen::RowVectorXd& K,
                          const Eigen::VectorXd& X0,
                          const std::function<double(double)>& w1x0, double t,
                          int steps = 400);

}  // namespace backstep
