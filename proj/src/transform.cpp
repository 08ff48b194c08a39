#include "backstep/transform.hpp"

#include <cmath>
#include <cstring>
#include <functional>

#include "backstep/errors.hpp"

namespace backstep {

namespace {

// Trapezoid weight of node j inside [a..b] (zero-width panels get weight 0).
inline double trap_w(int j, int a, int b) {
  if (b <= a) return 0.0;
  return (j == a || j == b) ? 0.5 : 1.0;
}

void hash_combine(std::uint64_t& seed, std::uint64_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

std::uint64_t hash_double(double x) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  std::memcpy(&bits, &x, sizeof(bits));
  return bits;
}

}  // namespace

std::uint64_t state_fingerprint(const PlantSpec& plant, const Grid& grid) {
  std::uint64_t seed = 0;
  for (int i = 0; i < plant.n(); ++i)
    for (int j = 0; j < plant.n(); ++j) hash_combine(seed, hash_double(plant.A(i, j)));
  for (int i = 0; i < plant.n(); ++i) hash_combine(seed, hash_double(plant.B(i)));
  hash_combine(seed, hash_double(plant.lambda));
  hash_combine(seed, hash_double(plant.l));
  hash_combine(seed, hash_double(plant.xi));
  hash_combine(seed, static_cast<std::uint64_t>(grid.node_count()));
  hash_combine(seed, static_cast<std::uint64_t>(grid.index_xi));
  return seed;
}

GainSet synthesize_gains(const PlantSpec& plant, const Grid& grid,
                         const std::vector<std::complex<double>>& poles,
                         double tail_tol, int feedback_sign) {
  if (feedback_sign != 1 && feedback_sign != -1)
    throw BadDimension("feedback_sign must be +1 or -1");
  validate_plant(plant);
  if (std::abs(grid.xi() - plant.xi) > 1e-12 || std::abs(grid.l() - plant.l) > 1e-12)
    throw GridMismatch("grid geometry does not match the plant");

  StabilizingGain gain = pole_place(plant.A, plant.B, poles);
  PhiFunction pf(plant.A, gain.K, plant.l);

  GainSet g{plant,
            grid,
            gain,
            pf,
            solve_k1(plant, pf, grid.h1, tail_tol),
            sample_k2(plant, grid.h2)};
  if (g.k1.n != grid.n1() || g.k2.n != grid.n2())
    throw GridMismatch("kernel grids do not align with the simulation grid");

  g.phi_rows = pf.sample(0.0, grid.h1, grid.n1() + 1, false);
  g.phi_prime_xi = pf.prime(plant.xi);
  g.dk1_xi = kernel_dx_at_interface(g.k1);
  g.dk2_xi = kernel_dx_at_interface(g.k2);
  g.k1_xixi = g.k1.values(g.k1.n, g.k1.n);
  g.k2_xixi = g.k2.values(0, 0);
  g.feedback_sign = feedback_sign;
  g.fingerprint = state_fingerprint(plant, grid);
  return g;
}

TargetState forward_transform(const CascadeState& state, const GainSet& g) {
  const Grid& grid = g.grid;
  const int n1 = grid.n1(), n2 = grid.n2();
  if (state.u1.size() != n1 + 1 || state.u2.size() != n2 + 1 ||
      state.X.size() != g.plant.n())
    throw GridMismatch("state does not match the gain set's grid");

  TargetState ts;
  ts.t = state.t;
  ts.X = state.X;
  ts.w = Eigen::VectorXd::Zero(grid.node_count());

  // left: w1(x_i) = u1_i - h1 sum_j tau k1(i,j) u1_j + phi(x_i) X
  for (int i = 0; i <= n1; ++i) {
    double integ = 0.0;
    for (int j = 0; j <= i; ++j)
      integ += trap_w(j, 0, i) * g.k1.values(i, j) * state.u1(j);
    ts.w(i) = state.u1(i) - grid.h1 * integ + g.phi_rows.row(i).dot(state.X);
  }
  ts.w1_xi = ts.w(n1);

  // right: w2(x_i) = u2_i + h2 sum_j tau k2(i,j) u2_j
  for (int i = 0; i <= n2; ++i) {
    double integ = 0.0;
    for (int j = i; j <= n2; ++j)
      integ += trap_w(j, i, n2) * g.k2.values(i, j) * state.u2(j);
    const double w2i = state.u2(i) + grid.h2 * integ;
    if (i == 0)
      ts.w2_xi = w2i; // packed storage keeps the left value at xi
    else
      ts.w(n1 + i) = w2i;
  }
  return ts;
}

namespace {

// Lower-triangular substitution for the left half: (I - K1) u1 = rhs.
Eigen::VectorXd solve_left(const Eigen::VectorXd& rhs, const GainSet& g) {
  const int n1 = g.grid.n1();
  const double h1 = g.grid.h1;
  Eigen::VectorXd u1(n1 + 1);
  for (int i = 0; i <= n1; ++i) {
    double acc = rhs(i);
    for (int j = 0; j < i; ++j)
      acc += h1 * trap_w(j, 0, i) * g.k1.values(i, j) * u1(j);
    const double diag = 1.0 - h1 * trap_w(i, 0, i) * g.k1.values(i, i);
    if (std::abs(diag) < 1e-12)
      throw SingularTransform("left transform diagonal vanished");
    u1(i) = acc / diag;
  }
  return u1;
}

// Upper-triangular substitution for the right half: (I + K2) u2 = w2,
// solved for rows i_start..n2 (i_start = 1 skips the xi row).
Eigen::VectorXd solve_right(const Eigen::VectorXd& w2, const GainSet& g,
                            int i_start) {
  const int n2 = g.grid.n2();
  const double h2 = g.grid.h2;
  Eigen::VectorXd u2 = Eigen::VectorXd::Zero(n2 + 1);
  for (int i = n2; i >= i_start; --i) {
    double acc = w2(i);
    for (int j = i + 1; j <= n2; ++j)
      acc -= h2 * trap_w(j, i, n2) * g.k2.values(i, j) * u2(j);
    const double diag = 1.0 + h2 * trap_w(i, i, n2) * g.k2.values(i, i);
    if (std::abs(diag) < 1e-12)
      throw SingularTransform("right transform diagonal vanished");
    u2(i) = acc / diag;
  }
  return u2;
}

}  // namespace

CascadeState inverse_transform(const TargetState& ts, const GainSet& g) {
  const Grid& grid = g.grid;
  const int n1 = grid.n1(), n2 = grid.n2();
  if (ts.w.size() != grid.node_count() || ts.X.size() != g.plant.n())
    throw GridMismatch("target state does not match the gain set's grid");

  CascadeState s;
  s.t = ts.t;
  s.X = ts.X;

  const Eigen::VectorXd rhs = ts.w.head(n1 + 1) - g.phi_rows * ts.X;
  s.u1 = solve_left(rhs, g);

  Eigen::VectorXd w2(n2 + 1);
  w2(0) = 0.0; // row skipped; continuity at xi supplies u2(xi)
  w2.tail(n2) = ts.w.tail(n2);
  s.u2 = solve_right(w2, g, /*i_start=*/1);
  s.u2(0) = s.u1(n1);
  return s;
}

double feedback_control(const CascadeState& state, const GainSet& g) {
  const Grid& grid = g.grid;
  const int n1 = grid.n1(), n2 = grid.n2();
  if (state.u1.size() != n1 + 1 || state.u2.size() != n2 + 1)
    throw GridMismatch("state does not match the gain set's grid");

  double i1 = 0.0;
  for (int j = 0; j <= n1; ++j)
    i1 += trap_w(j, 0, n1) * g.dk1_xi(j) * state.u1(j);
  double i2 = 0.0;
  for (int j = 0; j <= n2; ++j)
    i2 += trap_w(j, 0, n2) * g.dk2_xi(j) * state.u2(j);

  return (g.k1_xixi - g.k2_xixi) * state.u1(n1) + grid.h1 * i1 +
         g.feedback_sign * grid.h2 * i2 - g.phi_prime_xi.dot(state.X);
}

InterfaceGap interface_gap(const TargetState& ts, const Grid& grid) {
  const int ixi = grid.index_xi;
  const int last = grid.node_count() - 1;
  if (ixi < 2 || last - ixi < 2)
    throw BadGeometry("grid too coarse for interface stencils");

  InterfaceGap gap;
  gap.value_gap = std::abs(ts.w1_xi - ts.w2_xi);
  // One-sided second-order slopes built from each side's own xi value.
  const double left = (3.0 * ts.w1_xi - 4.0 * ts.w(ixi - 1) + ts.w(ixi - 2)) /
                      (2.0 * grid.h1);
  const double right = (-3.0 * ts.w2_xi + 4.0 * ts.w(ixi + 1) - ts.w(ixi + 2)) /
                       (2.0 * grid.h2);
  gap.slope_gap = std::abs(left - right);
  return gap;
}

CompatibilityResult check_compatibility(const CascadeState& state0,
                                        const GainSet& g, double tol) {
  const Grid& grid = g.grid;
  const int n1 = grid.n1(), n2 = grid.n2();
  if (state0.u1.size() != n1 + 1 || state0.u2.size() != n2 + 1)
    throw GridMismatch("state does not match the gain set's grid");

  const TargetState ts = forward_transform(state0, g);

  CompatibilityResult r;
  r.c1 = std::abs(ts.w1_xi - ts.w2_xi);

  const double du1 = (3.0 * state0.u1(n1) - 4.0 * state0.u1(n1 - 1) +
                      state0.u1(n1 - 2)) / (2.0 * grid.h1);
  const double du2 = (-3.0 * state0.u2(0) + 4.0 * state0.u2(1) -
                      state0.u2(2)) / (2.0 * grid.h2);
  r.c2 = std::abs(du1 - du2 - feedback_control(state0, g));
  r.pass = (r.c1 <= tol && r.c2 <= tol);
  return r;
}

CascadeState compatible_state(const Eigen::VectorXd& w0, const GainSet& g,
                              const Eigen::VectorXd& X0_base) {
  const Grid& grid = g.grid;
  const int n1 = grid.n1(), n2 = grid.n2();
  const int n = g.plant.n();
  if (w0.size() != grid.node_count())
    throw GridMismatch("profile does not match the grid");
  if (X0_base.size() != n) throw BadDimension("X0 has wrong size");
  if (std::abs(w0(0)) > 1e-12 || std::abs(w0(grid.node_count() - 1)) > 1e-12)
    throw BadGeometry("target profile must vanish at both ends");

  // Right field from the full upper-triangular solve (including the xi row).
  const Eigen::VectorXd u2 = solve_right(w0.tail(n2 + 1), g, 0);

  // Left field is affine in X; pick the ODE direction with the strongest
  // influence at xi and shift along it so the field is continuous there.
  const Eigen::VectorXd w1 = w0.head(n1 + 1);
  const Eigen::VectorXd base = solve_left(w1 - g.phi_rows * X0_base, g);
  int best = 0;
  double best_mag = -1.0;
  Eigen::MatrixXd dirs(n1 + 1, n);
  for (int k = 0; k < n; ++k) {
    dirs.col(k) = solve_left(-g.phi_rows.col(k), g);
    if (std::abs(dirs(n1, k)) > best_mag) {
      best_mag = std::abs(dirs(n1, k));
      best = k;
    }
  }
  const double gap = u2(0) - base(n1);
  double alpha = 0.0;
  if (best_mag > 1e-12) {
    alpha = gap / dirs(n1, best);
  } else if (std::abs(gap) > 1e-10) {
    throw SingularTransform("cannot reconcile field continuity at xi");
  }

  CascadeState s;
  s.X = X0_base + alpha * Eigen::VectorXd::Unit(n, best);
  s.u1 = base + alpha * dirs.col(best);
  s.u1(n1) = u2(0); // exact continuity (kills the last rounding bits)
  s.u2 = u2;
  return s;
}

}  // namespace backstep
