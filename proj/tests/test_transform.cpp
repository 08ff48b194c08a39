#include <doctest.h>

#include <cmath>

#include "backstep/errors.hpp"
#include "backstep/transform.hpp"
#include "test_helpers.hpp"

using namespace backstep;
using testutil::kPi;

namespace {

GainSet default_gains(double h = 0.01) {
  const PlantSpec p = testutil::default_plant();
  const Grid grid = build_grid(p.l, p.xi, h);
  return synthesize_gains(p, grid, {{-1, 0}, {-2, 0}});
}

// Hand-built gain set for a scalar plant with prescribed K, used for the
// lambda = 0 identity/closed-form cases where pole placement would pick a
// different gain.
GainSet manual_gains(const PlantSpec& p, double K0, double h) {
  const Grid grid = build_grid(p.l, p.xi, h);
  Eigen::RowVectorXd K(1);
  K << K0;
  GainSet g{p,
            grid,
            StabilizingGain{K, {{-1.0, 0.0}}},
            PhiFunction(p.A, K, p.l),
            solve_k1(p, PhiFunction(p.A, K, p.l), grid.h1, 1e-12),
            sample_k2(p, grid.h2)};
  g.phi_rows = g.pf.sample(0.0, grid.h1, grid.n1() + 1, false);
  g.phi_prime_xi = g.pf.prime(p.xi);
  g.dk1_xi = kernel_dx_at_interface(g.k1);
  g.dk2_xi = kernel_dx_at_interface(g.k2);
  g.k1_xixi = g.k1.values(g.k1.n, g.k1.n);
  g.k2_xixi = g.k2.values(0, 0);
  g.fingerprint = state_fingerprint(p, grid);
  return g;
}

}  // namespace

TEST_CASE("forward transform: zero state, left endpoint, linearity") {
  const GainSet g = default_gains();
  const int n = 2;
  const CascadeState zero = zero_state(g.grid, n);
  const TargetState tz = forward_transform(zero, g);
  CHECK(tz.w.cwiseAbs().maxCoeff() == 0.0);

  testutil::Rng rng(3);
  const CascadeState s1 = testutil::random_state(g.grid, n, rng);
  const CascadeState s2 = testutil::random_state(g.grid, n, rng);
  const TargetState t1 = forward_transform(s1, g);
  CHECK(t1.w(0) == 0.0); // u1(0) = 0, empty integral, phi(0) = 0

  // exact discrete linearity
  CascadeState lin = zero_state(g.grid, n);
  lin.X = 2.0 * s1.X - 0.5 * s2.X;
  lin.u1 = 2.0 * s1.u1 - 0.5 * s2.u1;
  lin.u2 = 2.0 * s1.u2 - 0.5 * s2.u2;
  const TargetState tlin = forward_transform(lin, g);
  const TargetState t2 = forward_transform(s2, g);
  const Eigen::VectorXd combo = 2.0 * t1.w - 0.5 * t2.w;
  CHECK((tlin.w - combo).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lambda = 0, K = 0: the transform is the identity") {
  PlantSpec p;
  p.A = Eigen::MatrixXd::Zero(1, 1);
  p.B = Eigen::VectorXd::Ones(1);
  p.lambda = 0.0;
  p.l = 1.0;
  p.xi = 0.4;
  const GainSet g = manual_gains(p, 0.0, 0.02);

  testutil::Rng rng(5);
  const CascadeState s = testutil::random_state(g.grid, 1, rng);
  const TargetState ts = forward_transform(s, g);
  CHECK((ts.w.head(g.grid.n1() + 1) - s.u1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((ts.w.tail(g.grid.n2()) - s.u2.tail(g.grid.n2())).cwiseAbs().maxCoeff()
        < 1e-14);
  const CascadeState back = inverse_transform(ts, g);
  CHECK((back.u1 - s.u1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((back.u2 - s.u2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("round trip is the identity to 1e-10 on random states") {
  const GainSet g = default_gains(0.01);
  testutil::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const CascadeState s = testutil::random_state(g.grid, 2, rng);
    const TargetState ts = forward_transform(s, g);
    const CascadeState back = inverse_transform(ts, g);
    CHECK((back.X - s.X).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.u1 - s.u1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.u2 - s.u2).cwiseAbs().maxCoeff() < 1e-10);
    // and the other composition order
    const TargetState ts2 = forward_transform(back, g);
    CHECK((ts2.w - ts.w).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("transform mismatched grids are rejected") {
  const GainSet g = default_gains(0.01);
  const Grid other = build_grid(1.0, 0.3, 0.02);
  const CascadeState s = zero_state(other, 2);
  CHECK_THROWS_AS(forward_transform(s, g), GridMismatch);
  CHECK_THROWS_AS(feedback_control(s, g), GridMismatch);
}

TEST_CASE("feedback law: zero state and the lambda = 0 scalar reduction") {
  const GainSet g = default_gains();
  CHECK(feedback_control(zero_state(g.grid, 2), g) == 0.0);

  // lambda = 0, A = 0, K = k: phi = -kx so k1(x,y) = k(x-y), k2 = 0, and
  // U = k * (X + int_0^xi u1 dy)
  PlantSpec p;
  p.A = Eigen::MatrixXd::Zero(1, 1);
  p.B = Eigen::VectorXd::Ones(1);
  p.lambda = 0.0;
  p.l = 1.0;
  p.xi = 0.4;
  const double k = 1.7;
  const GainSet gs = manual_gains(p, k, 0.02);
  testutil::Rng rng(23);
  CascadeState s = testutil::random_state(gs.grid, 1, rng);
  double trap = 0.0;
  for (int i = 0; i < gs.grid.n1(); ++i)
    trap += 0.5 * gs.grid.h1 * (s.u1(i) + s.u1(i + 1));
  CHECK(feedback_control(s, gs) ==
        doctest::Approx(k * (s.X(0) + trap)).epsilon(1e-10));
}

TEST_CASE("interface_gap: zero state, compatible state, constructed kink") {
  const GainSet g = default_gains(1.0 / 200.0);
  const TargetState tz = forward_transform(zero_state(g.grid, 2), g);
  const InterfaceGap gz = interface_gap(tz, g.grid);
  CHECK(gz.value_gap == 0.0);
  CHECK(gz.slope_gap == 0.0);

  // a smooth single-mode profile pulled back to a compatible state maps to a
  // target state with O(h^2) gaps
  Eigen::VectorXd w0(g.grid.node_count());
  for (int i = 0; i < g.grid.node_count(); ++i)
    w0(i) = std::sin(kPi * g.grid.nodes[i]);
  w0(0) = w0(g.grid.node_count() - 1) = 0.0;
  const CascadeState s0 = compatible_state(w0, g, Eigen::VectorXd::Zero(2));
  const InterfaceGap gap = interface_gap(forward_transform(s0, g), g.grid);
  CHECK(gap.value_gap < 1e-10);
  CHECK(gap.slope_gap < 0.05);

  // deliberate slope kink: |x - xi| tent has mismatched one-sided slopes
  TargetState kink = zero_target(g.grid, 2);
  for (int i = 0; i < g.grid.node_count(); ++i)
    kink.w(i) = std::max(0.0, 0.1 - std::abs(g.grid.nodes[i] - g.grid.xi()));
  kink.w1_xi = kink.w2_xi = kink.w(g.grid.index_xi);
  const InterfaceGap gk = interface_gap(kink, g.grid);
  CHECK(gk.slope_gap > 1.0);
}

TEST_CASE("check_compatibility: zero, constructed-compatible and kinked data") {
  const GainSet g = default_gains(1.0 / 200.0);
  const CompatibilityResult rz =
      check_compatibility(zero_state(g.grid, 2), g, 1e-12);
  CHECK(rz.c1 == 0.0);
  CHECK(rz.c2 == 0.0);
  CHECK(rz.pass);

  Eigen::VectorXd w0(g.grid.node_count());
  for (int i = 0; i < g.grid.node_count(); ++i)
    w0(i) = std::sin(kPi * g.grid.nodes[i]);
  w0(0) = w0(g.grid.node_count() - 1) = 0.0;
  const CascadeState s0 = compatible_state(w0, g, Eigen::VectorXd::Zero(2));
  const double tol = 200.0 * g.grid.h1 * g.grid.h1;
  const CompatibilityResult r0 = check_compatibility(s0, g, tol);
  CHECK(r0.c1 < 1e-10);
  CHECK(r0.c2 < tol);
  CHECK(r0.pass);

  // perturb the slope at xi by ~1: add a continuous tent around xi
  CascadeState kinked = s0;
  for (int i = 0; i <= g.grid.n1(); ++i)
    kinked.u1(i) += std::max(0.0, 1.0 - std::abs(g.grid.nodes[i] - g.grid.xi()) / 0.1) * 0.1;
  for (int i = 0; i <= g.grid.n2(); ++i)
    kinked.u2(i) += std::max(0.0, 1.0 - std::abs(g.grid.nodes[g.grid.index_xi + i] - g.grid.xi()) / 0.1) * 0.1;
  const CompatibilityResult rk = check_compatibility(kinked, g, tol);
  CHECK(rk.c2 > tol);
  CHECK_FALSE(rk.pass);
}

TEST_CASE("compatible_state is exactly continuous and Dirichlet-clean") {
  const GainSet g = default_gains(0.01);
  Eigen::VectorXd w0(g.grid.node_count());
  for (int i = 0; i < g.grid.node_count(); ++i)
    w0(i) = std::sin(3.0 * kPi * g.grid.nodes[i]) +
            0.3 * std::sin(kPi * g.grid.nodes[i]);
  w0(0) = w0(g.grid.node_count() - 1) = 0.0;
  const CascadeState s = compatible_state(w0, g, Eigen::VectorXd::Zero(2));
  CHECK(s.u1(0) == 0.0);
  CHECK(s.u2(g.grid.n2()) == 0.0);
  CHECK(s.u1(g.grid.n1()) == s.u2(0));
  CHECK_NOTHROW(validate_state(s, g.grid, 2));
  // it still maps forward to (approximately) the requested profile
  const TargetState ts = forward_transform(s, g);
  CHECK((ts.w.tail(g.grid.n2()) - w0.tail(g.grid.n2())).cwiseAbs().maxCoeff()
        < 1e-10);
}

TEST_CASE("discrete operator norms of the transform stabilize under refinement") {
  // measured sup over random states of ||Omega s|| / ||s||: boundedness of the
  // discrete operators, stable when h halves
  auto measure = [](double h) {
    const GainSet g = default_gains(h);
    testutil::Rng rng(31);
    double fwd = 0.0, inv = 0.0;
    for (int trial = 0; trial < 15; ++trial) {
      const CascadeState s = testutil::random_state(g.grid, 2, rng);
      const TargetState ts = forward_transform(s, g);
      const double ns = norm_H(s, g.grid);
      const double nt = norm_H(ts, g.grid);
      fwd = std::max(fwd, nt / ns);
      inv = std::max(inv, ns / nt);
    }
    return std::make_pair(fwd, inv);
  };
  const auto [f1, i1] = measure(0.01);
  const auto [f2, i2] = measure(0.005);
  CHECK(f1 < 50.0);
  CHECK(i1 < 50.0);
  CHECK(std::abs(f1 - f2) / f1 < 0.5);
  CHECK(std::abs(i1 - i2) / i1 < 0.5);
}

TEST_CASE("inverse transform flags a singular quadrature diagonal") {
  GainSet g = default_gains(0.01);
  // poison the k1 diagonal so 1 - (h/2) k1(x,x) crosses zero
  g.k1.values(g.k1.n / 2, g.k1.n / 2) = 2.0 / g.grid.h1;
  const TargetState ts = forward_transform(zero_state(g.grid, 2), g);
  TargetState bumped = ts;
  bumped.w(1) = 1.0;
  CHECK_THROWS_AS(inverse_transform(bumped, g), SingularTransform);
}
