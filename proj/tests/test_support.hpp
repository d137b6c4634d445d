#pragma once

// Shared fixtures and reference computations for the unit tests. The
// oracles here deliberately avoid the library code paths they check.

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "irlobs/lti.hpp"

namespace irlobs::testing {

inline std::string config_path(const std::string& name) {
  return std::string(IRLOBS_CONFIG_DIR) + "/" + name;
}

inline LtiSystem two_state_system() {
  Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2);
  A << 2, 1, 3, 2;
  B << 2, 0.5;
  C << 1, 0;
  return LtiSystem(A, B, C);
}

inline QuadraticCost two_state_cost() {
  Eigen::MatrixXd Q(2, 2), R(1, 1);
  Q << 2, 0, 0, 11;
  R << 1.5;
  return QuadraticCost(Q, R);
}

inline LtiSystem four_state_system() {
  Eigen::MatrixXd A(4, 4), B(4, 2), C = Eigen::MatrixXd::Zero(4, 4);
  A << 2, 4, 1, 0,
       0, 3, 6, 2,
       3, 2, 2, 6,
       3, 5, 6, 2;
  B << 7, 2,
       4, 5,
       3, 3,
       2, 6;
  C(0, 0) = 1;
  C(1, 1) = 1;
  return LtiSystem(A, B, C);
}

inline QuadraticCost four_state_cost() {
  Eigen::MatrixXd Q = Eigen::Vector4d(2, 5, 8, 11).asDiagonal();
  Eigen::MatrixXd R = Eigen::Vector2d(1.5, 0.5).asDiagonal();
  return QuadraticCost(Q, R);
}

/// Stabilizing ARE solution from the stable invariant subspace of the
/// Hamiltonian matrix, S = X2 X1^{-1}.
inline Eigen::MatrixXd hamiltonian_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) basis.col(col++) = es.eigenvectors().col(i);
  }
  const Eigen::MatrixXcd X1 = basis.topRows(n);
  const Eigen::MatrixXcd X2 = basis.bottomRows(n);
  const Eigen::MatrixXd S = (X2 * X1.inverse()).real();
  return 0.5 * (S + S.transpose());
}

/// Central differences of a vector function, one column per input entry.
inline Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols,
                                     double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = nd(rng);
  return M;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double floor = 0.5) {
  const Eigen::MatrixXd M = random_matrix(rng, n, n);
  return M * M.transpose() + floor * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

}  // namespace irlobs::testing
