#include "backstep/simulator.hpp"

#include <cmath>

#include "backstep/errors.hpp"

namespace backstep {

namespace {

// Index of grid node k (1 <= k <= m-1) inside the unknown vector, after the
// n ODE entries.  Nodes 0 and m are Dirichlet and eliminated.
struct Layout {
  int n;   // ODE dimension
  int m;   // total cells (last node index)
  int ixi; // grid index of the interface node
  int size() const { return n + m - 1; }
  int of_node(int k) const { return n + k - 1; }
};

// Builds the space-discretized generator L (with the interface row replaced
// separately) and the constraint row C.
void assemble(const Eigen::MatrixXd& Aode, const Eigen::VectorXd& B,
              double lambda, const Grid& grid, const Layout& lay,
              Eigen::MatrixXd& L, Eigen::RowVectorXd& C) {
  const int n = lay.n, m = lay.m, ixi = lay.ixi;
  const double h1 = grid.h1, h2 = grid.h2;
  L = Eigen::MatrixXd::Zero(lay.size(), lay.size());
  C = Eigen::RowVectorXd::Zero(lay.size());

  // ODE rows: X' = Aode X + B (4u_1 - u_2) / (2 h1)   (u_0 = 0)
  L.topLeftCorner(n, n) = Aode;
  L.col(lay.of_node(1)).head(n) += B * (4.0 / (2.0 * h1));
  L.col(lay.of_node(2)).head(n) += B * (-1.0 / (2.0 * h1));

  auto diffuse = [&](int k, double h) {
    const int r = lay.of_node(k);
    L(r, r) = -2.0 / (h * h) + lambda;
    if (k - 1 >= 1) L(r, lay.of_node(k - 1)) = 1.0 / (h * h);
    if (k + 1 <= m - 1) L(r, lay.of_node(k + 1)) = 1.0 / (h * h);
  };
  for (int k = 1; k < ixi; ++k) diffuse(k, h1);
  for (int k = ixi + 1; k < m; ++k) diffuse(k, h2);

  // Interface constraint: u_x(xi-) - u_x(xi+) = U via one-sided second-order
  // stencils; entries referencing the Dirichlet end nodes are dropped.
  C(lay.of_node(ixi)) = 3.0 / (2.0 * h1) + 3.0 / (2.0 * h2);
  C(lay.of_node(ixi - 1)) += -4.0 / (2.0 * h1);
  if (ixi - 2 >= 1) C(lay.of_node(ixi - 2)) += 1.0 / (2.0 * h1);
  C(lay.of_node(ixi + 1)) += -4.0 / (2.0 * h2);
  if (ixi + 2 <= m - 1) C(lay.of_node(ixi + 2)) += 1.0 / (2.0 * h2);
}

Eigen::VectorXd pack(const Eigen::VectorXd& X, const Eigen::VectorXd& field,
                     const Layout& lay) {
  Eigen::VectorXd z(lay.size());
  z.head(lay.n) = X;
  for (int k = 1; k < lay.m; ++k) z(lay.of_node(k)) = field(k);
  return z;
}

// Reconstructs the full field (with Dirichlet zeros) from the unknown vector.
Eigen::VectorXd unpack_field(const Eigen::VectorXd& z, const Layout& lay) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(lay.m + 1);
  for (int k = 1; k < lay.m; ++k) f(k) = z(lay.of_node(k));
  return f;
}

CascadeState to_state(const Eigen::VectorXd& z, const Layout& lay,
                      const Grid& grid, double t) {
  const Eigen::VectorXd f = unpack_field(z, lay);
  CascadeState s;
  s.t = t;
  s.X = z.head(lay.n);
  s.u1 = f.head(grid.n1() + 1);
  s.u2 = f.tail(grid.n2() + 1);
  return s;
}

// Shared theta-scheme driver.  `control` maps the current plant state to U;
// pass nullptr for U == 0.  `as_target` records TargetState snapshots instead
// of CascadeState ones (used by the target simulation).
SimTrace run_lines(const Eigen::MatrixXd& Aode, const Eigen::VectorXd& B,
                   double lambda, const Eigen::VectorXd& X0,
                   const Eigen::VectorXd& field0, const SimConfig& cfg,
                   const std::function<double(const CascadeState&)>& control,
                   bool as_target, bool guard_growth) {
  const Grid& grid = cfg.grid;
  if (cfg.dt <= 0.0 || cfg.T <= 0.0 || cfg.record_every < 1)
    throw BadGeometry("need dt > 0, T > 0, record_every >= 1");

  Layout lay{static_cast<int>(Aode.rows()), grid.n1() + grid.n2(),
             grid.index_xi};
  Eigen::MatrixXd L;
  Eigen::RowVectorXd C;
  assemble(Aode, B, lambda, grid, lay, L, C);

  const double theta = (cfg.scheme == Scheme::implicit_euler) ? 1.0 : 0.5;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(lay.size(), lay.size()) -
                        theta * cfg.dt * L;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(lay.size(), lay.size()) +
                        (1.0 - theta) * cfg.dt * L;
  // The interface node carries no time derivative: its row is the algebraic
  // constraint C z^{k+1} = U(t_k).
  const int crow = lay.of_node(lay.ixi);
  lhs.row(crow) = C;
  rhs.row(crow).setZero();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);

  SimTrace trace;
  trace.grid = grid;
  const int steps = static_cast<int>(std::lround(cfg.T / cfg.dt));

  Eigen::VectorXd z = pack(X0, field0, lay);

  double norm0 = 0.0;
  auto record = [&](int k) {
    const double t = k * cfg.dt;
    const CascadeState s = to_state(z, lay, grid, t);
    trace.times.push_back(t);
    trace.controls.push_back(control ? control(s) : 0.0);
    const double nh = norm_H(s, grid);
    trace.normH.push_back(nh);
    trace.normY.push_back(norm_Y(s, grid));
    if (as_target) {
      TargetState ts;
      ts.t = t;
      ts.X = s.X;
      ts.w = unpack_field(z, lay);
      ts.w1_xi = ts.w2_xi = ts.w(lay.ixi);
      trace.tstates.push_back(ts);
    } else {
      trace.states.push_back(s);
    }
    if (k == 0) norm0 = nh;
    if (guard_growth && nh > 1e6 * std::max(norm0, 1e-300))
      throw StepUnstable("closed-loop norm grew beyond 1e6x initial");
  };
  record(0);

  Eigen::VectorXd r(lay.size());
  for (int k = 0; k < steps; ++k) {
    double U = 0.0;
    if (control) U = control(to_state(z, lay, grid, k * cfg.dt));
    r.noalias() = rhs * z;
    r(crow) = U;
    z = lu.solve(r);
    if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) record(k + 1);
  }
  return trace;
}

}  // namespace

SimTrace simulate_closed_loop(const PlantSpec& plant, const GainSet& gains,
                              const CascadeState& state0,
                              const SimConfig& cfg) {
  validate_state(state0, cfg.grid, plant.n(), 1e-9);
  if (state_fingerprint(plant, cfg.grid) != gains.fingerprint)
    throw GridMismatch("gain set was synthesized for a different system");
  Eigen::VectorXd field0(cfg.grid.node_count());
  field0.head(cfg.grid.n1() + 1) = state0.u1;
  field0.tail(cfg.grid.n2() + 1) = state0.u2;
  auto control = [&gains](const CascadeState& s) {
    return feedback_control(s, gains);
  };
  return run_lines(plant.A, plant.B, plant.lambda, state0.X, field0, cfg,
                   control, /*as_target=*/false, /*guard_growth=*/true);
}

SimTrace simulate_open_loop(const PlantSpec& plant, const CascadeState& state0,
                            const SimConfig& cfg) {
  validate_state(state0, cfg.grid, plant.n(), 1e-9);
  Eigen::VectorXd field0(cfg.grid.node_count());
  field0.head(cfg.grid.n1() + 1) = state0.u1;
  field0.tail(cfg.grid.n2() + 1) = state0.u2;
  return run_lines(plant.A, plant.B, plant.lambda, state0.X, field0, cfg,
                   nullptr, /*as_target=*/false, /*guard_growth=*/false);
}

SimTrace simulate_target(const PlantSpec& plant, const Eigen::RowVectorXd& K,
                         const TargetState& ts0, const SimConfig& cfg) {
  if (ts0.w.size() != cfg.grid.node_count())
    throw GridMismatch("target profile does not match the grid");
  const Eigen::MatrixXd Acl = plant.A + plant.B * K;
  return run_lines(Acl, plant.B, /*lambda=*/0.0, ts0.X, ts0.w, cfg, nullptr,
                   /*as_target=*/true, /*guard_growth=*/false);
}

double exact_target_solution(const Eigen::VectorXd& w0, const Grid& grid,
                             double x, double t, int modes) {
  if (modes < 1) throw BadDimension("modes must be >= 1");
  if (w0.size() != grid.node_count())
    throw GridMismatch("profile does not match the grid");
  const double l = grid.l();
  const double pi = 3.14159265358979323846;

  double value = 0.0;
  for (int k = 1; k <= modes; ++k) {
    // trapezoid over both subintervals (shared xi node split half/half)
    double coef = 0.0;
    for (int i = 0; i < grid.node_count(); ++i) {
      double w;
      if (i == 0 || i == grid.node_count() - 1)
        w = (i == 0 ? grid.h1 : grid.h2) * 0.5;
      else if (i == grid.index_xi)
        w = 0.5 * (grid.h1 + grid.h2);
      else
        w = (i < grid.index_xi) ? grid.h1 : grid.h2;
      coef += w * w0(i) * std::sin(k * pi * grid.nodes[i] / l);
    }
    value += (2.0 / l) * coef * std::exp(-k * k * pi * pi * t / (l * l)) *
             std::sin(k * pi * x / l);
  }
  return value;
}

Eigen::VectorXd duhamel_X(const PlantSpec& plant, const Eigen::RowVectorXd& K,
                          const Eigen::VectorXd& X0,
                          const std::function<double(double)>& w1x0, double t,
                          int steps) {
  const Eigen::MatrixXd Acl = plant.A + plant.B * K;
  Eigen::VectorXd X = mat_exp(Acl, t) * X0;
  if (!w1x0 || steps < 1) return X;
  const double dtau = t / steps;
  Eigen::VectorXd integ = Eigen::VectorXd::Zero(plant.n());
  for (int j = 0; j <= steps; ++j) {
    const double tau = j * dtau;
    const double w = (j == 0 || j == steps) ? 0.5 : 1.0;
    integ += w * dtau * (mat_exp(Acl, t - tau) * plant.B) * w1x0(tau);
  }
  return X + integ;
}

}  // namespace backstep
