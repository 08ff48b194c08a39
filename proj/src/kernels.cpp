#include "backstep/kernels.hpp"

#include <cmath>

#include "backstep/errors.hpp"

namespace backstep {

double psi(double z) {
  if (z < 0.0) throw NegativeArgument("psi requires z >= 0");
  double term = 0.5; // m = 0
  double sum = term;
  for (int m = 1; m < 400; ++m) {
    term *= (z / 4.0) / (static_cast<double>(m) * (m + 1));
    sum += term;
    if (std::abs(term) <= 1e-16 * std::abs(sum)) break;
  }
  return sum;
}

double k2_eval(const PlantSpec& plant, double x, double y) {
  const double tol = 1e-12 * std::max(1.0, plant.l);
  if (x < plant.xi - tol || y < x - tol || y > plant.l + tol)
    throw OutOfDomain("k2 requires xi <= x <= y <= l");
  const double sx = plant.l - x;
  const double sy = plant.l - y;
  const double z = plant.lambda * (sx * sx - sy * sy);
  return plant.lambda * sy * psi(std::max(z, 0.0));
}

GoursatSolution solve_goursat(const GoursatProblem& p, double h,
                              double tail_tol) {
  if (!(h > 0.0) || !(tail_tol > 0.0))
    throw BadGeometry("solve_goursat needs h > 0 and tail_tol > 0");
  const int J = std::max(2, static_cast<int>(std::lround(p.extent / h)));
  const double hh = p.extent / J;

  GoursatSolution sol;
  sol.h = hh;
  sol.j_max = J;
  const int I = 2 * J; // zeta index bound

  // Data part D(zeta,eta) = gamma(eta) + delta0(zeta) - delta0(eta).
  Eigen::VectorXd gam(J + 1), del(I + 1);
  for (int j = 0; j <= J; ++j) gam(j) = p.gamma(j * hh);
  for (int i = 0; i <= I; ++i) del(i) = p.delta0(i * hh);
  if (std::abs(gam(0) - del(0)) > 1e-10 * std::max(1.0, std::abs(gam(0))))
    throw BadGeometry("Goursat corner data inconsistent: gamma(0) != delta0(0)");

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(I + 1, J + 1);
  for (int i = 0; i <= I; ++i)
    for (int j = 0; j <= std::min(i, 2 * J - i); ++j)
      D(i, j) = gam(j) + del(i) - del(j);

  // Factorial majorant bookkeeping (see bounds field): term1 covers the edge
  // data magnitude c*Z, term2 the diagonal magnitude mu.
  const double Z = 2.0 * p.extent;
  const double mu = gam.cwiseAbs().maxCoeff();
  double b1 = std::abs(p.c) * Z; // c^{n+1} Z^{2n+1} / (n! (n+1)!), n = 0
  double b2 = mu;                // mu c^n Z^{2n} / (n!)^2, n = 0

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(I + 1, J + 1);
  Eigen::MatrixXd R(I + 1, J + 1), C(I + 1, J + 1), next(I + 1, J + 1);

  for (int n = 0; n < 200; ++n) {
    // R(i,j) = int_0^{eta_j} G(zeta_i, s) ds, cumulative trapezoid in j.
    R.setZero();
    for (int i = 0; i <= I; ++i)
      for (int j = 1; j <= std::min(i, 2 * J - i); ++j)
        R(i, j) = R(i, j - 1) + 0.5 * hh * (G(i, j - 1) + G(i, j));
    // C(i,j) = int_{eta_j}^{zeta_i} R(t, eta_j) dt, cumulative trapezoid in i.
    C.setZero();
    for (int j = 0; j <= J; ++j)
      for (int i = j + 1; i <= 2 * J - j; ++i)
        C(i, j) = C(i - 1, j) + 0.5 * hh * (R(i - 1, j) + R(i, j));

    next = D + p.c * C;

    double inc = 0.0;
    for (int i = 0; i <= I; ++i)
      for (int j = 0; j <= std::min(i, 2 * J - i); ++j)
        inc = std::max(inc, std::abs(next(i, j) - G(i, j)));
    G.swap(next);

    sol.increments.push_back(inc);
    sol.bounds.push_back(b1 + b2);
    sol.iterations = n + 1;
    if (inc <= tail_tol && b1 + b2 <= tail_tol) {
      sol.G = G;
      return sol;
    }
    // advance the majorant to iteration n+1
    const double m = n + 1;
    b1 *= std::abs(p.c) * Z * Z / (m * (m + 1.0));
    b2 *= std::abs(p.c) * Z * Z / (m * m);
  }
  throw NoConvergenceBudget("Goursat iteration cap (200) exceeded");
}

KernelGrid solve_k1(const PlantSpec& plant, const PhiFunction& pf, double h,
                    double tail_tol) {
  const int N = std::max(2, static_cast<int>(std::lround(plant.xi / h)));
  const double hh = plant.xi / N;

  // phi(eta)B sampled once on the Goursat grid.
  const Eigen::MatrixXd phis = pf.sample(0.0, hh, N + 1, /*derivative=*/false);
  const Eigen::VectorXd phiB = phis * plant.B;

  GoursatProblem p;
  p.c = plant.lambda / 4.0;
  p.extent = plant.xi;
  p.gamma = [&](double eta) {
    const int j = static_cast<int>(std::lround(eta / hh));
    return -phiB(j);
  };
  p.delta0 = [&](double zeta) { return -plant.lambda * zeta / 4.0; };

  const GoursatSolution sol = solve_goursat(p, hh, tail_tol);

  KernelGrid kg;
  kg.which = KernelKind::k1;
  kg.x0 = 0.0;
  kg.h = sol.h;
  kg.n = N;
  kg.iterations = sol.iterations;
  kg.tail_bound = sol.bounds.back();
  kg.increments = sol.increments;
  kg.bounds = sol.bounds;
  kg.values = Eigen::MatrixXd::Zero(N + 1, N + 1);
  // k1(x,y) = G(x+y, x-y)
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= i; ++j) kg.values(i, j) = sol.G(i + j, i - j);
  return kg;
}

KernelGrid sample_k2(const PlantSpec& plant, double h_target) {
  const double len = plant.l - plant.xi;
  const int N = std::max(2, static_cast<int>(std::lround(len / h_target)));
  const double hh = len / N;

  KernelGrid kg;
  kg.which = KernelKind::k2;
  kg.x0 = plant.xi;
  kg.h = hh;
  kg.n = N;
  kg.values = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (int i = 0; i <= N; ++i) {
    const double x = (i == N) ? plant.l : plant.xi + i * hh;
    for (int j = i; j <= N; ++j) {
      const double y = (j == N) ? plant.l : plant.xi + j * hh;
      kg.values(i, j) = k2_eval(plant, x, y);
    }
  }
  return kg;
}

KernelGrid solve_k2_iterative(const PlantSpec& plant, double h,
                              double tail_tol) {
  const double len = plant.l - plant.xi;
  const int N = std::max(2, static_cast<int>(std::lround(len / h)));
  const double hh = len / N;

  // Reflected coordinates s = l-x, t = l-y turn k2's problem into a Goursat
  // problem with zero diagonal data and linear edge data.
  GoursatProblem p;
  p.c = plant.lambda / 4.0;
  p.extent = len;
  p.gamma = [](double) { return 0.0; };
  p.delta0 = [&](double zeta) { return plant.lambda * zeta / 4.0; };

  const GoursatSolution sol = solve_goursat(p, hh, tail_tol);

  KernelGrid kg;
  kg.which = KernelKind::k2;
  kg.x0 = plant.xi;
  kg.h = sol.h;
  kg.n = N;
  kg.iterations = sol.iterations;
  kg.tail_bound = sol.bounds.back();
  kg.increments = sol.increments;
  kg.bounds = sol.bounds;
  kg.values = Eigen::MatrixXd::Zero(N + 1, N + 1);
  // k2(xi + i h, xi + j h) = G(2N - i - j, j - i)
  for (int i = 0; i <= N; ++i)
    for (int j = i; j <= N; ++j) kg.values(i, j) = sol.G(2 * N - i - j, j - i);
  return kg;
}

KernelResidual kernel_residual(const KernelGrid& kg, const PlantSpec& plant,
                               const PhiFunction* pf) {
  const int N = kg.n;
  const double h = kg.h;
  const auto& V = kg.values;
  KernelResidual r;

  if (kg.which == KernelKind::k1) {
    for (int i = 2; i <= N - 1; ++i)
      for (int j = 1; j <= i - 1; ++j) {
        const double kxx = (V(i + 1, j) - 2.0 * V(i, j) + V(i - 1, j)) / (h * h);
        const double kyy = (V(i, j + 1) - 2.0 * V(i, j) + V(i, j - 1)) / (h * h);
        r.interior = std::max(r.interior,
                              std::abs(kxx - kyy - plant.lambda * V(i, j)));
      }
    if (pf == nullptr)
      throw BadDimension("k1 residual check needs the gain function");
    const Eigen::MatrixXd phis = pf->sample(0.0, h, N + 1, false);
    const Eigen::VectorXd phiB = phis * plant.B;
    for (int i = 0; i <= N; ++i) {
      const double x = kg.x_of(i);
      r.boundary = std::max(r.boundary,
                            std::abs(V(i, i) + plant.lambda * x / 2.0));
      r.boundary = std::max(r.boundary, std::abs(V(i, 0) + phiB(i)));
    }
  } else {
    for (int i = 1; i <= N - 1; ++i)
      for (int j = i + 1; j <= N - 1; ++j) {
        const double kxx = (V(i + 1, j) - 2.0 * V(i, j) + V(i - 1, j)) / (h * h);
        const double kyy = (V(i, j + 1) - 2.0 * V(i, j) + V(i, j - 1)) / (h * h);
        r.interior = std::max(r.interior,
                              std::abs(kxx - kyy - plant.lambda * V(i, j)));
      }
    for (int i = 0; i <= N; ++i) {
      const double x = kg.x_of(i);
      r.boundary = std::max(
          r.boundary, std::abs(V(i, i) - plant.lambda * (plant.l - x) / 2.0));
      r.boundary = std::max(r.boundary, std::abs(V(i, N)));
    }
  }
  return r;
}

Eigen::VectorXd kernel_dx_at_interface(const KernelGrid& kg) {
  const int N = kg.n;
  const double h = kg.h;
  if (N < 5) throw BadGeometry("kernel grid too coarse for interface derivatives");
  const auto& V = kg.values;
  Eigen::VectorXd d(N + 1);

  if (kg.which == KernelKind::k1) {
    // x = xi is the last row; backward one-sided stencil needs rows N-2..N,
    // valid while the stencil stays inside the triangle (j <= N-2).
    for (int j = 0; j <= N - 2; ++j)
      d(j) = (3.0 * V(N, j) - 4.0 * V(N - 1, j) + V(N - 2, j)) / (2.0 * h);
    for (int j = N - 1; j <= N; ++j)
      d(j) = 3.0 * d(j - 1) - 3.0 * d(j - 2) + d(j - 3);
  } else {
    // x = xi is row 0; forward stencil valid for j >= 2.
    for (int j = 2; j <= N; ++j)
      d(j) = (-3.0 * V(0, j) + 4.0 * V(1, j) - V(2, j)) / (2.0 * h);
    for (int j = 1; j >= 0; --j)
      d(j) = 3.0 * d(j + 1) - 3.0 * d(j + 2) + d(j + 3);
  }
  return d;
}

}  // namespace backstep
