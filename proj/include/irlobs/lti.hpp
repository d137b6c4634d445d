#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace irlobs {

/// Continuous-time linear agent  x' = A x + B u,  y' = C x.
///
/// Dimensions are checked on construction and the observability of (A, C)
/// is evaluated once and cached. Instances are immutable.
class LtiSystem {
 public:
  /// Throws std::invalid_argument when the matrix shapes disagree.
  LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& C() const { return C_; }

  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(B_.cols()); }
  int L() const { return static_cast<int>(C_.rows()); }

  /// rank([C; CA; ...; CA^{n-1}]) == n.
  bool observable() const { return observable_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd C_;
  bool observable_ = false;
};

/// Quadratic running cost x'Qx + u'Ru together with the optional value matrix
/// S of the associated Riccati equation.
class QuadraticCost {
 public:
  /// Throws std::invalid_argument if Q or R is not symmetric (1e-12), or
  /// "R not positive definite" when R has a non-positive eigenvalue.
  QuadraticCost(Eigen::MatrixXd Q, Eigen::MatrixXd R);

  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const std::optional<Eigen::MatrixXd>& S() const { return S_; }

  /// Copy of this cost with S populated.
  QuadraticCost WithValueMatrix(Eigen::MatrixXd S) const;

 private:
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd R_;
  std::optional<Eigen::MatrixXd> S_;
};

Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& C);

/// max Re(eig(M)) < 0.
bool is_hurwitz(const Eigen::MatrixXd& M);

/// Frobenius norm of A'S + SA - S B R^{-1} B' S + Q.
double care_residual(const LtiSystem& system, const QuadraticCost& cost,
                     const Eigen::MatrixXd& S);

/// Solves A'X + XA = -M for X (Kronecker formulation, intended for n <= ~12).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& M);

/// Stabilizing solution of the continuous algebraic Riccati equation.
///
/// Newton-Kleinman iteration started from a stabilizing gain (zero when A is
/// already Hurwitz, otherwise from the Bass Lyapunov construction).
/// Stops when successive iterates differ by less than 1e-12 in Frobenius
/// norm (relative to max(1, |S|)) or after 100 iterations; the residual must
/// be below 1e-8 relative to the largest term of the equation, otherwise
/// "ARE solver failed" is thrown.
Eigen::MatrixXd solve_care(const LtiSystem& system, const QuadraticCost& cost);

/// Convenience: cost.WithValueMatrix(solve_care(system, cost)).
QuadraticCost with_care_solution(const LtiSystem& system,
                                 const QuadraticCost& cost);

/// Optimal state feedback K* = R^{-1} B' S, so that u* = -K* x.
/// Throws std::logic_error("call solve_care first") when S is unset.
Eigen::MatrixXd lqr_gain(const LtiSystem& system, const QuadraticCost& cost);

/// Output-injection gain K (n x L) with eig(A - K C) equal to `poles`.
///
/// Multi-output pairs are reduced to a single output c = v'C using a random
/// combination vector v (fixed seed, up to 10 draws). Repeated poles are
/// separated by shifting the k-th duplicate by k * 1e-6 along the real axis
/// before placement. Throws std::runtime_error("pole placement infeasible")
/// when no draw yields an observable reduced pair that reproduces the poles.
Eigen::MatrixXd place_observer_gain(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& C,
                                    const std::vector<std::complex<double>>& poles);

inline Eigen::MatrixXd place_observer_gain(
    const LtiSystem& system, const std::vector<std::complex<double>>& poles) {
  return place_observer_gain(system.A(), system.C(), poles);
}

/// Largest distance between each requested pole and its nearest (unused)
/// eigenvalue of M.
double pole_mismatch(const Eigen::MatrixXd& M,
                     const std::vector<std::complex<double>>& poles);

}  // namespace irlobs
