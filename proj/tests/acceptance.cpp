// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.
//
// Criteria 6, 9 and 12 probe exponential closed-loop convergence to the
// companion heat system.  The interface feedback law enforces only slope
// continuity of the transformed field at xi; its value continuity is not
// preserved by the flow, so the closed loop is not conjugate to the pure heat
// target and these three criteria fail.  They are kept red on purpose rather
// than weakened; see README.md ("Known limitations") for the analysis.

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "backstep/analysis.hpp"
#include "backstep/config.hpp"
#include "backstep/errors.hpp"
#include "backstep/simulator.hpp"
#include "backstep/transform.hpp"

using namespace backstep;

namespace {

constexpr double kPi = 3.14159265358979323846;

PlantSpec default_plant() {
  PlantSpec p;
  p.A = Eigen::MatrixXd::Zero(2, 2);
  p.A(0, 1) = 1.0;
  p.B = Eigen::VectorXd::Zero(2);
  p.B(1) = 1.0;
  p.lambda = 20.0;
  p.l = 1.0;
  p.xi = 0.3;
  return p;
}

const std::vector<std::complex<double>> kPoles = {{-1.0, 0.0}, {-2.0, 0.0}};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Eigen::VectorXd sine_mode(const Grid& grid, int k) {
  Eigen::VectorXd w(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i)
    w(i) = std::sin(k * kPi * grid.nodes[i] / grid.l());
  w(0) = w(grid.node_count() - 1) = 0.0;
  return w;
}

std::vector<double> field_norms(const SimTrace& tr) {
  std::vector<double> out;
  for (const CascadeState& s : tr.states) {
    const double a = field_l2(s.u1, tr.grid.h1);
    const double b = field_l2(s.u2, tr.grid.h2);
    out.push_back(std::sqrt(a * a + b * b));
  }
  return out;
}

std::vector<double> target_field_norms(const SimTrace& tr) {
  std::vector<double> out;
  for (const TargetState& ts : tr.tstates) {
    const double a = field_l2(ts.w.head(tr.grid.n1() + 1), tr.grid.h1);
    const double b = field_l2(ts.w.tail(tr.grid.n2() + 1), tr.grid.h2);
    out.push_back(std::sqrt(a * a + b * b));
  }
  return out;
}

// Max over recorded snapshots of the distance between the transformed
// closed-loop state and the directly simulated target state.
double conjugacy_gap(const SimTrace& closed, const SimTrace& target,
                     const GainSet& g) {
  double worst = 0.0;
  const std::size_t m = std::min(closed.states.size(), target.tstates.size());
  for (std::size_t k = 0; k < m; ++k) {
    const TargetState a = forward_transform(closed.states[k], g);
    const TargetState& b = target.tstates[k];
    worst = std::max(worst, (a.w - b.w).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.X - b.X).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct Shared {
  PlantSpec plant;
  GainSet gains;           // synthesized at h = 1/200
  LyapunovCertificate cert;
  CascadeState state0;     // compatible mode-1 data
  SimTrace closed;         // default experiment, T = 2
  SimTrace target;         // same grid/steps, transformed initial data
};

Shared run_default_experiment() {
  const PlantSpec plant = default_plant();
  const Grid grid = build_grid(plant.l, plant.xi, 1.0 / 200.0);
  GainSet gains = synthesize_gains(plant, grid, kPoles);
  LyapunovCertificate cert = build_certificate(
      plant, gains.gain.K, Eigen::MatrixXd::Identity(2, 2), 2.0);
  CascadeState state0 =
      compatible_state(sine_mode(grid, 1), gains, Eigen::VectorXd::Zero(2));
  SimConfig cfg;
  cfg.grid = grid;
  cfg.dt = 1e-4;
  cfg.T = 2.0;
  cfg.record_every = 100;
  SimTrace closed = simulate_closed_loop(plant, gains, state0, cfg);
  SimTrace target = simulate_target(plant, gains.gain.K,
                                    forward_transform(state0, gains), cfg);
  return Shared{plant, std::move(gains), std::move(cert), std::move(state0),
                std::move(closed), std::move(target)};
}

using Check = std::function<bool(std::string&)>;

}  // namespace

int main() {
  const Shared sh = run_default_experiment();
  const PlantSpec plant = sh.plant;

  std::vector<std::pair<const char*, Check>> criteria;

  criteria.emplace_back("kernel PDE residuals and boundary data", [&](std::string& d) {
    const Grid g1 = build_grid(plant.l, plant.xi, 0.01);
    const Grid g2 = build_grid(plant.l, plant.xi, 0.005);
    const PhiFunction pf(plant.A, sh.gains.gain.K, plant.l);
    const KernelGrid k1a = solve_k1(plant, pf, g1.h1, 1e-10);
    const KernelGrid k1b = solve_k1(plant, pf, g2.h1, 1e-10);
    const KernelGrid k2a = sample_k2(plant, g1.h2);
    const KernelGrid k2b = sample_k2(plant, g2.h2);
    const KernelResidual r1a = kernel_residual(k1a, plant, &pf);
    const KernelResidual r1b = kernel_residual(k1b, plant, &pf);
    const KernelResidual r2a = kernel_residual(k2a, plant);
    const KernelResidual r2b = kernel_residual(k2b, plant);
    const double q1 = r1a.interior / r1b.interior;
    const double q2 = r2a.interior / r2b.interior;
    d = "k1 " + fmt(r1a.interior) + " ratio " + fmt(q1) + ", k2 " +
        fmt(r2a.interior) + " ratio " + fmt(q2) + ", bc " +
        fmt(std::max({r1a.boundary, r2a.boundary}));
    const double bc_tol = 1e-8 + 10.0 * g1.h1 * g1.h1;
    return r1a.interior <= 1e-2 && r2a.interior <= 1e-2 &&
           q1 > 4.0 * 0.7 && q1 < 4.0 * 1.3 && q2 > 4.0 * 0.7 &&
           q2 < 4.0 * 1.3 && r1a.boundary <= bc_tol && r2a.boundary <= 1e-8;
  });

  criteria.emplace_back("series vs iterative kernel cross-oracle", [&](std::string& d) {
    PlantSpec p = plant;
    p.lambda = 1.0;
    const KernelGrid closed = sample_k2(p, 1.0 / 200.0);
    const KernelGrid iter = solve_k2_iterative(p, 1.0 / 200.0, 1e-12);
    double worst = 0.0;
    for (int i = 0; i <= closed.n; ++i)
      for (int j = i; j <= closed.n; ++j)
        worst = std::max(worst,
                         std::abs(closed.values(i, j) - iter.values(i, j)));
    d = "max diff " + fmt(worst);
    return worst <= 1e-8;
  });

  criteria.emplace_back("iteration increments under the factorial bound", [&](std::string& d) {
    const PhiFunction pf(plant.A, sh.gains.gain.K, plant.l);
    const KernelGrid k1 = solve_k1(plant, pf, 0.005, 1e-10);
    const KernelGrid k2 = solve_k2_iterative(plant, 0.005, 1e-10);
    bool ok = k1.iterations > 2 && k2.iterations > 2;
    for (std::size_t n = 0; n < k1.increments.size(); ++n)
      ok = ok && k1.increments[n] <= k1.bounds[n] * (1.0 + 1e-12);
    for (std::size_t n = 0; n < k2.increments.size(); ++n)
      ok = ok && k2.increments[n] <= k2.bounds[n] * (1.0 + 1e-12);
    d = "k1 iters " + std::to_string(k1.iterations) + ", k2 iters " +
        std::to_string(k2.iterations);
    return ok;
  });

  criteria.emplace_back("gain function endpoint and ODE certification", [&](std::string& d) {
    bool ok = true;
    // endpoints on the experiment's own gain function
    const PhiFunction pf(plant.A, sh.gains.gain.K, plant.l);
    ok = ok && pf.eval(0.0).cwiseAbs().maxCoeff() <= 1e-12;
    ok = ok &&
         (pf.prime(0.0) + sh.gains.gain.K).cwiseAbs().maxCoeff() <= 1e-12;
    // scalar closed forms
    Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(1, 1);
    Eigen::RowVectorXd K1 = Eigen::RowVectorXd::Ones(1);
    const PhiFunction lin(A0, K1, 1.0);
    ok = ok && std::abs(lin.eval(0.7)(0) + 0.7) <= 1e-10;
    Eigen::MatrixXd A4 = Eigen::MatrixXd::Constant(1, 1, 4.0);
    const PhiFunction sh4(A4, K1, 1.0);
    ok = ok && std::abs(sh4.eval(1.0)(0) + std::sinh(2.0) / 2.0) <= 1e-10;
    // second derivative matches phi*A with an O(h^2) refinement ratio;
    // measured on the exponential scalar case (the experiment's phi is a
    // cubic, for which the centered difference is exact)
    auto resid = [&](double h) {
      double worst = 0.0;
      for (double x = h; x < 1.0 - h / 2; x += h) {
        const double dd =
            (sh4.eval(x + h)(0) - 2.0 * sh4.eval(x)(0) + sh4.eval(x - h)(0)) /
            (h * h);
        worst = std::max(worst, std::abs(dd - 4.0 * sh4.eval(x)(0)));
      }
      return worst;
    };
    const double ratio = resid(0.01) / resid(0.005);
    ok = ok && ratio > 4.0 * 0.7 && ratio < 4.0 * 1.3;
    d = "refinement ratio " + fmt(ratio);
    return ok;
  });

  criteria.emplace_back("transform round trip on 100 random states", [&](std::string& d) {
    std::uint64_t seed = 12345;
    auto uni = [&seed]() {
      seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;
      return 2.0 * (static_cast<double>(seed >> 11) / 9007199254740992.0) - 1.0;
    };
    const Grid& grid = sh.gains.grid;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      CascadeState s = zero_state(grid, 2);
      for (int i = 0; i < 2; ++i) s.X(i) = uni();
      for (int i = 1; i <= grid.n1(); ++i) s.u1(i) = uni();
      for (int i = 1; i < grid.n2(); ++i) s.u2(i) = uni();
      s.u2(0) = s.u1(grid.n1());
      const CascadeState back = inverse_transform(forward_transform(s, sh.gains), sh.gains);
      worst = std::max(worst, (back.X - s.X).cwiseAbs().maxCoeff());
      worst = std::max(worst, (back.u1 - s.u1).cwiseAbs().maxCoeff());
      worst = std::max(worst, (back.u2 - s.u2).cwiseAbs().maxCoeff());
    }
    d = "max round-trip error " + fmt(worst);
    return worst <= 1e-10;
  });

  criteria.emplace_back("closed loop conjugate to the companion heat system", [&](std::string& d) {
    const double gap200 = conjugacy_gap(sh.closed, sh.target, sh.gains);
    // refinement pair at h = 1/100
    const Grid g100 = build_grid(plant.l, plant.xi, 0.01);
    const GainSet gains100 = synthesize_gains(plant, g100, kPoles);
    const CascadeState s100 =
        compatible_state(sine_mode(g100, 1), gains100, Eigen::VectorXd::Zero(2));
    SimConfig cfg;
    cfg.grid = g100;
    cfg.dt = 2e-4;
    cfg.T = 2.0;
    cfg.record_every = 50;
    const SimTrace c100 = simulate_closed_loop(plant, gains100, s100, cfg);
    const SimTrace t100 = simulate_target(plant, gains100.gain.K,
                                          forward_transform(s100, gains100), cfg);
    const double gap100 = conjugacy_gap(c100, t100, gains100);
    d = "max gap " + fmt(gap200) + " at h=1/200, " + fmt(gap100) +
        " at h=1/100";
    return gap200 <= 1e-2 && gap200 < gap100;
  });

  criteria.emplace_back("companion heat system matches its Fourier solution", [&](std::string& d) {
    const Grid& grid = sh.gains.grid;
    const Eigen::VectorXd w0 = sine_mode(grid, 1);
    TargetState ts0 = zero_target(grid, 2);
    ts0.w = w0;
    ts0.w1_xi = ts0.w2_xi = w0(grid.index_xi);
    SimConfig cfg;
    cfg.grid = grid;
    cfg.dt = 1e-4;
    cfg.T = 0.5;
    cfg.record_every = 100;
    const SimTrace tr = simulate_target(plant, sh.gains.gain.K, ts0, cfg);
    double worst = 0.0;
    const std::size_t k01 = 10; // t = 0.1
    for (double x : {0.25, 0.5, 0.8}) {
      int node = 0;
      for (int i = 1; i < grid.node_count(); ++i)
        if (std::abs(grid.nodes[i] - x) < std::abs(grid.nodes[node] - x))
          node = i;
      const double exact = exact_target_solution(w0, grid, grid.nodes[node], 0.1);
      worst = std::max(worst, std::abs(tr.tstates[k01].w(node) - exact));
    }
    const DecayReport rep =
        fit_decay_rate(tr.times, target_field_norms(tr), 0.1, 0.5);
    const double rel = std::abs(rep.fitted_rate - kPi * kPi) / (kPi * kPi);
    d = "max field error " + fmt(worst) + ", fitted rate " +
        fmt(rep.fitted_rate);
    return worst <= 1e-3 && rel <= 0.02;
  });

  criteria.emplace_back("uncontrolled reaction field grows at lambda - pi^2", [&](std::string& d) {
    const Grid grid = build_grid(plant.l, plant.xi, 0.01);
    CascadeState s0 = zero_state(grid, 2);
    const Eigen::VectorXd w0 = sine_mode(grid, 1);
    s0.u1 = w0.head(grid.n1() + 1);
    s0.u2 = w0.tail(grid.n2() + 1);
    SimConfig cfg;
    cfg.grid = grid;
    cfg.dt = 1e-4;
    cfg.T = 0.5;
    cfg.record_every = 10;
    const SimTrace tr = simulate_open_loop(plant, s0, cfg);
    const DecayReport rep =
        fit_decay_rate(tr.times, field_norms(tr), 0.1, 0.5);
    const double growth = -rep.fitted_rate;
    const double expected = plant.lambda - kPi * kPi;
    d = "fitted growth " + fmt(growth) + " vs " + fmt(expected);
    return std::abs(growth - expected) / expected <= 0.02;
  });

  criteria.emplace_back("exponential decay certified by the Lyapunov envelope", [&](std::string& d) {
    const std::vector<double> V = lyapunov_trace(sh.closed, sh.gains, sh.cert);
    const EnvelopeReport env = check_envelope(sh.closed.times, V, sh.cert.delta);
    const double ratio = sh.closed.normY.back() / sh.closed.normY.front();
    const DecayReport rep =
        fit_decay_rate(sh.closed.times, sh.closed.normY, 0.5, 2.0);
    d = "norm ratio " + fmt(ratio) + ", fitted rate " + fmt(rep.fitted_rate) +
        ", envelope excess " + fmt(env.worst_envelope);
    return ratio <= 1e-2 && rep.fitted_rate > 0.0 && env.envelope_ok &&
           env.monotone_ok;
  });

  criteria.emplace_back("Lyapunov certificate algebra", [&](std::string& d) {
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd Acl = plant.A + plant.B * sh.gains.gain.K;
    const Eigen::MatrixXd resid =
        sh.cert.P * Acl + Acl.transpose() * sh.cert.P + Q;
    const double r = resid.cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sh.cert.P);
    const double pmin = es.eigenvalues().minCoeff();
    const double pmax = es.eigenvalues().maxCoeff();
    const double pb2 = (sh.cert.P * plant.B).squaredNorm();
    const bool sym = (sh.cert.P - sh.cert.P.transpose()).cwiseAbs().maxCoeff() == 0.0;
    const double l = plant.l;
    const double delta_formula =
        std::min({1.0 / (2.0 * pmax), 1.0 / (4.0 * l * l), 2.0 / sh.cert.b});
    const bool strict = sh.cert.b > 2.0 * pb2 / 1.0 &&
                        sh.cert.a > 2.0 * sh.cert.b * (1.0 + l) / l + 2.0;
    d = "residual " + fmt(r) + ", delta " + fmt(sh.cert.delta);
    return r <= 1e-10 && sym && pmin > 0.0 && strict &&
           sh.cert.delta == delta_formula;
  });

  criteria.emplace_back("initial-data compatibility conditions", [&](std::string& d) {
    const Grid& grid = sh.gains.grid;
    const double tol = 200.0 * grid.h1 * grid.h1 + 1e-8;
    const CompatibilityResult good = check_compatibility(sh.state0, sh.gains, tol);
    CascadeState kinked = sh.state0;
    for (int i = 0; i <= grid.n1(); ++i)
      kinked.u1(i) +=
          0.1 * std::max(0.0, 1.0 - std::abs(grid.nodes[i] - grid.xi()) / 0.1);
    for (int i = 0; i <= grid.n2(); ++i)
      kinked.u2(i) +=
          0.1 * std::max(0.0, 1.0 - std::abs(grid.nodes[grid.index_xi + i] -
                                             grid.xi()) / 0.1);
    const CompatibilityResult bad = check_compatibility(kinked, sh.gains, tol);
    d = "c1 " + fmt(good.c1) + ", c2 " + fmt(good.c2) + " (tol " + fmt(tol) +
        "), kinked c2 " + fmt(bad.c2);
    return good.pass && !bad.pass;
  });

  criteria.emplace_back("positive fitted decay across actuator locations", [&](std::string& d) {
    std::ostringstream detail;
    bool ok = true;
    for (double xi : {0.2, 0.3, 0.5, 0.7}) {
      PlantSpec p = plant;
      p.xi = xi;
      try {
        const Grid grid = build_grid(p.l, p.xi, 0.01);
        const GainSet g = synthesize_gains(p, grid, kPoles);
        const CascadeState s0 =
            compatible_state(sine_mode(grid, 1), g, Eigen::VectorXd::Zero(2));
        SimConfig cfg;
        cfg.grid = grid;
        cfg.dt = 5e-4;
        cfg.T = 10.0;
        cfg.record_every = 40;
        const SimTrace tr = simulate_closed_loop(p, g, s0, cfg);
        const DecayReport rep =
            fit_decay_rate(tr.times, tr.normH, 2.5, 10.0);
        detail << " xi=" << xi << ": " << fmt(rep.fitted_rate);
        ok = ok && rep.fitted_rate > 0.0;
      } catch (const StepUnstable&) {
        detail << " xi=" << xi << ": unstable";
        ok = false;
      }
    }
    d = detail.str();
    return ok;
  });

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string detail;
    bool pass = false;
    try {
      pass = criteria[i].second(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %2zu (%s): %s%s%s\n", i + 1, criteria[i].first,
                pass ? "PASS" : "FAIL", detail.empty() ? "" : " — ",
                detail.c_str());
    if (!pass) ++failures;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
