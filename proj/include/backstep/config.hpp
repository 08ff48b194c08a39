#pragma once

#include <complex>
#include <string>
#include <vector>

#include "backstep/plant.hpp"
#include "backstep/simulator.hpp"
#include "backstep/transform.hpp"

namespace backstep {

// Initial-data recipe for simulations.
//   compatible: inverse-transform a smooth target profile (sum of sine modes)
//               and shift the ODE state so the field is continuous at xi;
//               satisfies the compatibility conditions by construction.
//   eigenmode:  raw field sum of sine modes (used for open-loop / target runs).
//   zero:       equilibrium.
struct InitialData {
  std::string type = "compatible";
  std::vector<std::pair<int, double>> modes = {{1, 1.0}}; // (mode, amplitude)
  Eigen::VectorXd X0; // base ODE state; sized on load (zeros by default)
};

struct RunConfig {
  PlantSpec plant;

  // synthesis
  std::vector<std::complex<double>> poles; // default {-1, ..., -n}
  Eigen::MatrixXd Q;                       // default identity
  double margin = 2.0;
  double kernel_h = 0.005; // spacing of the exported kernel/phi CSVs
  double tail_tol = 1e-10;
  int feedback_sign = +1;

  // simulation
  Scheme scheme = Scheme::crank_nicolson;
  double h = 0.005;
  double dt = 1e-4;
  double T = 2.0;
  int record_every = 100;
  InitialData initial;

  // output
  std::string out_dir = "out";
  std::vector<double> probes = {0.15, 0.3, 0.65};
};

// Default experiment: double integrator, lambda = 20, l = 1, xi = 0.3,
// poles {-1,-2}, h = 1/200, dt = 1e-4, T = 2, Crank-Nicolson.
RunConfig default_config();

// Parses a JSON config file; unknown keys are rejected.  Throws ConfigError.
RunConfig load_config(const std::string& path);

// Serializes a config back to JSON text (used to ship the example config).
std::string config_to_json(const RunConfig& cfg);

// Materializes the initial data recipe on a grid (needs gains for the
// compatible recipe; pass nullptr for eigenmode/zero).
CascadeState make_initial_state(const RunConfig& cfg, const Grid& grid,
                                const GainSet* gains);

// Sine-series profile on the grid (zero at both ends).
Eigen::VectorXd mode_profile(const Grid& grid,
                             const std::vector<std::pair<int, double>>& modes);

}  // namespace backstep
