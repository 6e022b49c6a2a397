// Gauss-Legendre / Gauss-Hermite rules and the Hermite-function basis.
//
// Hermite functions are the L^2-normalized eigenfunctions of the harmonic
// ladder: phi_0(y) = pi^{-1/4} e^{-y^2/2}, and
//   phi_k = sqrt(2/k) y phi_{k-1} - sqrt((k-1)/k) phi_{k-2},
// so that (d/dy + y) phi_n = sqrt(2n) phi_{n-1} and
// (-d/dy + y) phi_n = sqrt(2(n+1)) phi_{n+1}.
//
// Gauss-Hermite weights are returned in "modified" form W_i = w_i e^{y_i^2}
// (computed stably as 1 / sum_k phi_k(y_i)^2, the Christoffel function), so
// that sum_i W_i f(y_i) integrates f(y) = p(y) e^{-y^2} without ever forming
// e^{y^2} explicitly.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "dwscat/common.hpp"

namespace dwscat {

struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

namespace detail {

// Nodes/first-eigenvector-weights of a symmetric tridiagonal Jacobi matrix
// with zero diagonal and off-diagonal entries offdiag[k], k = 0..n-2.
inline QuadRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n - 1; ++k) {
    J(k, k + 1) = offdiag[k];
    J(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace detail

// Gauss-Legendre rule on [-1, 1].
inline QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return detail::golub_welsch(off, 2.0);
}

// Gauss-Legendre rule mapped to [a, b].
inline QuadRule gauss_legendre(int n, double a, double b) {
  QuadRule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

// Hermite functions phi_0..phi_top evaluated at y (stable recurrence).
inline Eigen::VectorXd hermite_eval(double y, int top) {
  Eigen::VectorXd phi(top + 1);
  const double phi0 = std::pow(pi, -0.25) * std::exp(-0.5 * y * y);
  phi[0] = phi0;
  if (top >= 1) phi[1] = std::sqrt(2.0) * y * phi0;
  for (int k = 2; k <= top; ++k)
    phi[k] = std::sqrt(2.0 / k) * y * phi[k - 1] -
             std::sqrt((k - 1.0) / k) * phi[k - 2];
  return phi;
}

// Gauss-Hermite rule with modified weights W_i = w_i e^{y_i^2}.
inline QuadRule gauss_hermite_modified(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
  QuadRule rule = detail::golub_welsch(off, 1.0);  // weights recomputed below
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd phi = hermite_eval(rule.nodes[i], n - 1);
    rule.weights[i] = 1.0 / phi.squaredNorm();
  }
  return rule;
}

// Hermite basis cache: levels 0..n_max tabulated on an n_quad-point
// Gauss-Hermite grid. Read-only after construction.
struct HermiteBasis {
  int n_max = 0;
  int n_quad = 0;
  Eigen::VectorXd y;    // quadrature nodes
  Eigen::VectorXd w;    // modified weights
  Eigen::MatrixXd phi;  // n_quad x (n_max+1), phi(i, n) = phi_n(y_i)

  static HermiteBasis build(int n_max, int n_quad) {
    if (n_quad < n_max + 1)
      throw std::invalid_argument("HermiteBasis: n_quad must exceed n_max");
    HermiteBasis basis;
    basis.n_max = n_max;
    basis.n_quad = n_quad;
    QuadRule rule = gauss_hermite_modified(n_quad);
    basis.y = rule.nodes;
    basis.w = rule.weights;
    basis.phi.resize(n_quad, n_max + 1);
    for (int i = 0; i < n_quad; ++i)
      basis.phi.row(i) = hermite_eval(basis.y[i], n_max).transpose();
    return basis;
  }

  // Quadrature projection of nodal samples onto level n.
  double project(const Eigen::VectorXd& samples, int n) const {
    return (w.array() * phi.col(n).array() * samples.array()).sum();
  }
};

// Classical Legendre polynomials P_0..P_top at t in [-1, 1].
inline Eigen::VectorXd legendre_eval(double t, int top) {
  Eigen::VectorXd P(top + 1);
  P[0] = 1.0;
  if (top >= 1) P[1] = t;
  for (int k = 2; k <= top; ++k)
    P[k] = ((2.0 * k - 1.0) * t * P[k - 1] - (k - 1.0) * P[k - 2]) / k;
  return P;
}

inline double legendre_p(int j, double t) { return legendre_eval(t, j)[j]; }

}  // namespace dwscat
