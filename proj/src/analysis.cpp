#include "backstep/analysis.hpp"

#include <cmath>

#include "backstep/errors.hpp"

namespace backstep {

double lyapunov_value(const TargetState& ts, const Grid& grid,
                      const LyapunovCertificate& cert) {
  const int n1 = grid.n1(), n2 = grid.n2();
  const Eigen::VectorXd w1 = ts.w.head(n1 + 1);
  const Eigen::VectorXd w2 = ts.w.tail(n2 + 1);

  const double l2a = field_l2(w1, grid.h1), l2b = field_l2(w2, grid.h2);
  const double d1 = field_l2(field_derivative(w1, grid.h1), grid.h1);
  const double d2 = field_l2(field_derivative(w2, grid.h2), grid.h2);

  return ts.X.dot(cert.P * ts.X) + 0.5 * cert.a * (l2a * l2a + l2b * l2b) +
         0.5 * cert.b * (d1 * d1 + d2 * d2);
}

std::vector<double> lyapunov_trace(const SimTrace& trace, const GainSet& gains,
                                   const LyapunovCertificate& cert) {
  std::vector<double> V;
  V.reserve(trace.states.size() + trace.tstates.size());
  for (const auto& s : trace.states)
    V.push_back(lyapunov_value(forward_transform(s, gains), trace.grid, cert));
  for (const auto& ts : trace.tstates)
    V.push_back(lyapunov_value(ts, trace.grid, cert));
  return V;
}

EnvelopeReport check_envelope(const std::vector<double>& times,
                              const std::vector<double>& V, double delta,
                              double eps_disc) {
  if (times.size() != V.size() || V.empty())
    throw BadDimension("times and V must be equal-length and nonempty");
  EnvelopeReport r;
  const double V0 = V.front();
  if (V0 <= 0.0) {
    // zero trajectory: trivially fine
    r.envelope_ok = r.monotone_ok = true;
    return r;
  }
  r.worst_envelope = -1e300;
  r.worst_increase = -1e300;
  for (std::size_t k = 0; k < V.size(); ++k) {
    const double bound = V0 * std::exp(-delta * (times[k] - times[0]));
    r.worst_envelope = std::max(r.worst_envelope, V[k] / bound - 1.0);
    if (k > 0)
      r.worst_increase = std::max(r.worst_increase, (V[k] - V[k - 1]) / V0);
  }
  r.envelope_ok = r.worst_envelope <= eps_disc;
  r.monotone_ok = r.worst_increase <= 1e-8;
  return r;
}

DecayReport fit_decay_rate(const std::vector<double>& times,
                           const std::vector<double>& values,
                           double window_start, double window_end,
                           double theoretical_delta) {
  if (times.size() != values.size())
    throw BadDimension("times and values must have equal length");
  std::vector<double> t, y;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < window_start - 1e-12 || times[k] > window_end + 1e-12)
      continue;
    if (values[k] <= 0.0)
      throw NonPositiveValues("log fit requires positive values in the window");
    t.push_back(times[k]);
    y.push_back(std::log(values[k]));
  }
  if (t.size() < 10)
    throw BadDimension("decay fit needs at least 10 samples in the window");

  const int m = static_cast<int>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int k = 0; k < m; ++k) {
    st += t[k];
    sy += y[k];
    stt += t[k] * t[k];
    sty += t[k] * y[k];
  }
  const double denom = m * stt - st * st;
  const double slope = (m * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / m;

  DecayReport r;
  r.fitted_rate = -slope;
  r.t_start = t.front();
  r.t_end = t.back();
  r.C_estimate = std::exp(intercept);
  r.theoretical_delta = theoretical_delta;
  r.samples = m;
  double ss = 0.0;
  for (int k = 0; k < m; ++k) {
    const double e = y[k] - (intercept + slope * t[k]);
    ss += e * e;
  }
  r.residual_of_fit = std::sqrt(ss / m);
  return r;
}

std::vector<double> open_loop_spectrum(const PlantSpec& plant, int count) {
  if (count < 1) throw BadDimension("count must be >= 1");
  const double pi = 3.14159265358979323846;
  std::vector<double> s(count);
  for (int k = 1; k <= count; ++k)
    s[k - 1] = plant.lambda - k * k * pi * pi / (plant.l * plant.l);
  return s;
}

int count_unstable(const std::vector<double>& spectrum) {
  int c = 0;
  for (double v : spectrum)
    if (v > 0.0) ++c;
  return c;
}

}  // namespace backstep
