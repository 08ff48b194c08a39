#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "backstep/plant.hpp"

namespace backstep {

// State-feedback gain making A + BK Hurwitz, together with the requested
// closed-loop spectrum.
struct StabilizingGain {
  Eigen::RowVectorXd K;
  std::vector<std::complex<double>> poles;
};

// Single-input Ackermann construction: K = -e_n^T C^{-1} p(A), where C is the
// controllability matrix and p the desired characteristic polynomial.
StabilizingGain pole_place(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                           const std::vector<std::complex<double>>& poles);

// exp(x*M) via scaling-and-squaring with a truncated Taylor series whose
// remainder bound enforces rel_tol.
Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& M, double x,
                        double rel_tol = 1e-13);

// Gain function phi(x) = (0, -K) exp(xM) E with M = [[0, A],[I, 0]] and
// E = [[I],[0]]; compensates the ODE coupling in the left transform.
// Satisfies phi(0) = 0, phi'(0) = -K, phi'' = phi A.
class PhiFunction {
public:
  PhiFunction(const Eigen::MatrixXd& A, const Eigen::RowVectorXd& K, double l);

  Eigen::RowVectorXd eval(double x) const;   // phi(x), 1 x n
  Eigen::RowVectorXd prime(double x) const;  // phi'(x), 1 x n

  // phi (or phi') sampled at x = x0 + i*h, i = 0..count-1, rows of the result.
  Eigen::MatrixXd sample(double x0, double h, int count, bool derivative) const;

  int n() const { return static_cast<int>(K_.cols()); }
  double domain_length() const { return l_; }
  const Eigen::RowVectorXd& K() const { return K_; }

private:
  Eigen::RowVectorXd K_; // 1 x n
  Eigen::MatrixXd M_;    // 2n x 2n, [[0, A],[I, 0]]
  Eigen::MatrixXd E_;    // 2n x n, [[I],[0]]
  double l_;
};

// Explicit stability certificate: V = X^T P X + (a/2)||w||^2 + (b/2)||w_x||^2
// decays at rate delta along target trajectories.
struct LyapunovCertificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  double a = 0.0;
  double b = 0.0;
  double alpha1 = 0.0; // lower sandwich constant
  double alpha2 = 0.0; // upper sandwich constant
  double delta = 0.0;  // certified decay rate
};

// Solves P Acl + Acl^T P = -Q via the vectorized n^2 linear system.
// Throws NotHurwitz / AsymmetricQ.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Acl,
                               const Eigen::MatrixXd& Q);

// b = margin * 2|PB|^2 / lambda_min(Q); a = margin * (2b(1+l)/l + 2);
// alpha1 = min(lmin(P), a/2, b/2); alpha2 = max(lmax(P), a/2, b/2);
// delta = min(lmin(Q)/(2 lmax(P)), 1/(4l^2), 2/b).  Requires margin > 1.
LyapunovCertificate build_certificate(const PlantSpec& plant,
                                      const Eigen::RowVectorXd& K,
                                      const Eigen::MatrixXd& Q, double margin);

}  // namespace backstep
