#include "backstep/gains.hpp"

#include <algorithm>
#include <cmath>

#include "backstep/errors.hpp"

namespace backstep {

namespace {

// Checks that the multiset of poles is closed under complex conjugation.
void check_conjugate_closed(const std::vector<std::complex<double>>& poles) {
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i] || std::abs(poles[i].imag()) < 1e-14) continue;
    bool found = false;
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(poles[j] - std::conj(poles[i])) < 1e-12) {
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found)
      throw PolesNotConjugateClosed("complex pole without conjugate partner");
  }
}

}  // namespace

StabilizingGain pole_place(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                           const std::vector<std::complex<double>>& poles) {
  const int n = static_cast<int>(A.rows());
  if (static_cast<int>(poles.size()) != n)
    throw BadDimension("need exactly n poles");
  check_conjugate_closed(poles);

  // Desired characteristic polynomial p(s) = prod (s - p_k); coefficients are
  // real once conjugate closure holds.
  std::vector<std::complex<double>> c(n + 1, 0.0);
  c[0] = 1.0;
  for (int k = 0; k < n; ++k)
    for (int j = k + 1; j >= 1; --j) c[j] -= poles[k] * c[j - 1];

  // Horner evaluation of p(A).
  Eigen::MatrixXd pA = Eigen::MatrixXd::Identity(n, n) * c[0].real();
  for (int j = 1; j <= n; ++j)
    pA = pA * A + c[j].real() * Eigen::MatrixXd::Identity(n, n);

  const Eigen::MatrixXd C = controllability_matrix(A, B);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
  if (!lu.isInvertible())
    throw NotControllable("controllability matrix is singular");

  Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
  en(n - 1) = 1.0;
  // e_n^T C^{-1} = solve(C^T, e_n)^T
  const Eigen::VectorXd y = Eigen::FullPivLU<Eigen::MatrixXd>(C.transpose()).solve(en);

  StabilizingGain g;
  g.K = -(y.transpose() * pA);
  g.poles = poles;
  return g;
}

Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& M, double x, double rel_tol) {
  if (!(rel_tol > 0.0)) throw BadDimension("rel_tol must be > 0");
  const int m = static_cast<int>(M.rows());
  Eigen::MatrixXd T = x * M;

  // Scale so ||T|| <= 0.5, then square back.
  const double norm = T.cwiseAbs().rowwise().sum().maxCoeff(); // infinity norm
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    T /= std::pow(2.0, squarings);
  }

  // Taylor series with explicit geometric remainder bound: once the scaled
  // norm r = ||T||/(k+1) < 1, the tail is bounded by ||term|| * r/(1-r).
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m, m);
  const double tnorm = T.cwiseAbs().rowwise().sum().maxCoeff();
  for (int k = 1; k <= 60; ++k) {
    term = (term * T) / static_cast<double>(k);
    sum += term;
    const double r = tnorm / (k + 1);
    if (r < 1.0) {
      const double tail = term.cwiseAbs().rowwise().sum().maxCoeff() * r / (1.0 - r);
      if (tail <= rel_tol * std::max(1.0, sum.cwiseAbs().rowwise().sum().maxCoeff()))
        break;
    }
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

PhiFunction::PhiFunction(const Eigen::MatrixXd& A, const Eigen::RowVectorXd& K,
                         double l)
    : K_(K), l_(l) {
  const int n = static_cast<int>(A.rows());
  if (K.cols() != n) throw BadDimension("K must be 1 x n");
  M_ = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M_.topRightCorner(n, n) = A;
  M_.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  E_ = Eigen::MatrixXd::Zero(2 * n, n);
  E_.topRows(n) = Eigen::MatrixXd::Identity(n, n);
}

Eigen::RowVectorXd PhiFunction::eval(double x) const {
  if (x < -1e-12 || x > l_ + 1e-12)
    throw OutOfDomain("phi evaluated outside [0, l]");
  const int n = this->n();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * n);
  row.tail(n) = -K_;
  return row * mat_exp(M_, x) * E_;
}

Eigen::RowVectorXd PhiFunction::prime(double x) const {
  if (x < -1e-12 || x > l_ + 1e-12)
    throw OutOfDomain("phi' evaluated outside [0, l]");
  const int n = this->n();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * n);
  row.tail(n) = -K_;
  return row * (M_ * mat_exp(M_, x)) * E_;
}

Eigen::MatrixXd PhiFunction::sample(double x0, double h, int count,
                                    bool derivative) const {
  const int n = this->n();
  Eigen::MatrixXd out(count, n);
  // exp((x0 + i h) M) built incrementally from exp(x0 M) and the step factor.
  Eigen::MatrixXd expx = mat_exp(M_, x0);
  const Eigen::MatrixXd step = mat_exp(M_, h);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * n);
  row.tail(n) = -K_;
  for (int i = 0; i < count; ++i) {
    if (derivative)
      out.row(i) = row * (M_ * expx) * E_;
    else
      out.row(i) = row * expx * E_;
    expx = expx * step;
  }
  return out;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Acl,
                               const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(Acl.rows());
  if (Q.rows() != n || Q.cols() != n) throw BadDimension("Q must be n x n");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()))
    throw AsymmetricQ("Q is not symmetric");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw AsymmetricQ("Q is not positive definite");
  }
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(Acl);
    if (es.eigenvalues().real().maxCoeff() >= 0.0)
      throw NotHurwitz("closed-loop matrix has a nonnegative eigenvalue");
  }

  // Vectorized equation (I (x) Acl^T + Acl^T (x) I) vec(P) = -vec(Q).
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd At = Acl.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        // vec index (col-major): entry (k + n*j) of vec(P)
        S(i + n * j, i + n * k) += At(j, k); // P * Acl term, transposed layout
        S(i + n * j, k + n * j) += At(i, k); // Acl^T * P term
      }
  Eigen::VectorXd q(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) q(i + n * j) = -Q(i, j);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible()) throw NotHurwitz("Lyapunov system is singular");
  const Eigen::VectorXd p = lu.solve(q);
  Eigen::MatrixXd P(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) P(i, j) = p(i + n * j);
  P = 0.5 * (P + P.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw NotHurwitz("Lyapunov solution is not positive definite");
  const double resid = (P * Acl + Acl.transpose() * P + Q).cwiseAbs().maxCoeff();
  if (resid > 1e-10 * Q.cwiseAbs().maxCoeff())
    throw NotHurwitz("Lyapunov residual too large");
  return P;
}

LyapunovCertificate build_certificate(const PlantSpec& plant,
                                      const Eigen::RowVectorXd& K,
                                      const Eigen::MatrixXd& Q, double margin) {
  if (!(margin > 1.0))
    throw MarginTooSmall("margin must exceed 1 to satisfy the strict inequalities");
  const Eigen::MatrixXd Acl = plant.A + plant.B * K;
  const Eigen::MatrixXd P = solve_lyapunov(Acl, Q);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esP(P), esQ(Q);
  const double lminQ = esQ.eigenvalues().minCoeff();
  const double lminP = esP.eigenvalues().minCoeff();
  const double lmaxP = esP.eigenvalues().maxCoeff();
  const double PB = (P * plant.B).norm();
  const double l = plant.l;

  LyapunovCertificate c;
  c.P = P;
  c.Q = Q;
  c.b = margin * 2.0 * PB * PB / lminQ;
  c.a = margin * (2.0 * c.b * (1.0 + l) / l + 2.0);
  c.alpha1 = std::min({lminP, c.a / 2.0, c.b / 2.0});
  c.alpha2 = std::max({lmaxP, c.a / 2.0, c.b / 2.0});
  c.delta = std::min({lminQ / (2.0 * lmaxP), 1.0 / (4.0 * l * l), 2.0 / c.b});
  return c;
}

}  // namespace backstep
