#pragma once

#include <vector>

#include "backstep/gains.hpp"
#include "backstep/plant.hpp"
#include "backstep/simulator.hpp"
#include "backstep/transform.hpp"

namespace backstep {

struct DecayReport {
  double fitted_rate = 0.0;    // -slope of the log-linear fit (1/time)
  double t_start = 0.0;
  double t_end = 0.0;
  double residual_of_fit = 0.0; // RMS residual of the fit in log space
  double theoretical_delta = 0.0;
  double C_estimate = 0.0;     // exp(intercept)
  int samples = 0;
};

// V = X^T P X + (a/2) ||w||^2 + (b/2) ||w_x||^2 with trapezoid quadrature and
// the grid's finite-difference derivative.
double lyapunov_value(const TargetState& ts, const Grid& grid,
                      const LyapunovCertificate& cert);

// V along a closed-loop trace: each recorded state is forward-transformed and
// evaluated.  The result is also stored into trace.V by the caller if wanted.
std::vector<double> lyapunov_trace(const SimTrace& trace, const GainSet& gains,
                                   const LyapunovCertificate& cert);

struct EnvelopeReport {
  bool envelope_ok = false;   // V(t) <= V(0) e^{-delta t} * (1 + eps)
  bool monotone_ok = false;   // V nonincreasing within per-step slack
  double worst_envelope = 0.0; // max V(t) / (V(0) e^{-delta t}) - 1
  double worst_increase = 0.0; // max (V_{k+1} - V_k) / V(0)
};

// Checks the exponential envelope with slack eps_disc (default 0.05) and
// monotonicity within per-sample slack 1e-8 * V(0).
EnvelopeReport check_envelope(const std::vector<double>& times,
                              const std::vector<double>& V, double delta,
                              double eps_disc = 0.05);

// Least-squares line on (t, log value) within [window_start, window_end].
// Throws NonPositiveValues if a value in the window is <= 0; requires at
// least 10 samples in the window.
DecayReport fit_decay_rate(const std::vector<double>& times,
                           const std::vector<double>& values,
                           double window_start, double window_end,
                           double theoretical_delta = 0.0);

// Open-loop field spectrum lambda - k^2 pi^2 / l^2, k = 1..count.
std::vector<double> open_loop_spectrum(const PlantSpec& plant, int count);
int count_unstable(const std::vector<double>& spectrum);

}  // namespace backstep
