#include "irlobs/lti.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "irlobs/linalg.hpp"

namespace irlobs {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr int kNewtonIterations = 100;
constexpr double kNewtonTol = 1e-12;
constexpr double kCareResidualTol = 1e-8;
constexpr double kPoleTol = 1e-6;
constexpr double kRepeatedPoleShift = 1e-6;
constexpr int kOutputCombinationDraws = 10;

std::string shape(const Eigen::MatrixXd& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

// Coefficients c_0..c_{n-1} of the monic polynomial prod(s - p_i).
Eigen::VectorXd monic_coefficients(const std::vector<std::complex<double>>& poles) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& p : poles) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k + 1] += c[k];
      next[k] -= p * c[k];
    }
    c = std::move(next);
  }
  const auto n = static_cast<Eigen::Index>(poles.size());
  Eigen::VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(c[k].imag()) > 1e-9 * std::max(1.0, std::abs(c[k])))
      throw std::invalid_argument("poles must be closed under conjugation");
    out(k) = c[k].real();
  }
  return out;
}

std::vector<std::complex<double>> separate_repeated(
    const std::vector<std::complex<double>>& poles) {
  std::vector<std::complex<double>> out = poles;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    int duplicates = 0;
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(poles[j] - poles[i]) <= 1e-12 * std::max(1.0, std::abs(poles[i])))
        ++duplicates;
    }
    out[i] += kRepeatedPoleShift * duplicates;
  }
  return out;
}

// Ackermann's formula for a single-output pair (A, c): l = p(A) O^{-1} e_n.
std::optional<Eigen::VectorXd> place_single_output(const Eigen::MatrixXd& A,
                                                   const Eigen::RowVectorXd& c,
                                                   const Eigen::VectorXd& coeffs) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd O = observability_matrix(A, c);
  if (numerical_rank(O) < n) return std::nullopt;
  Eigen::MatrixXd pA = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    pA = A * pA + coeffs(k) * Eigen::MatrixXd::Identity(n, n);
  }
  Eigen::VectorXd e_n = Eigen::VectorXd::Zero(n);
  e_n(n - 1) = 1.0;
  const Eigen::VectorXd l = pA * O.fullPivLu().solve(e_n);
  if (!l.allFinite()) return std::nullopt;
  return l;
}

}  // namespace

LtiSystem::LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols())
    throw std::invalid_argument("A must be square and non-empty, got " + shape(A_));
  if (B_.rows() != A_.rows() || B_.cols() == 0)
    throw std::invalid_argument("B must have n rows and m >= 1 columns, got " +
                                shape(B_));
  if (C_.cols() != A_.rows() || C_.rows() == 0)
    throw std::invalid_argument("C must have n columns and L >= 1 rows, got " +
                                shape(C_));
  if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite())
    throw std::invalid_argument("system matrices must be finite");
  observable_ = numerical_rank(observability_matrix(A_, C_)) == n();
}

QuadraticCost::QuadraticCost(Eigen::MatrixXd Q, Eigen::MatrixXd R)
    : Q_(std::move(Q)), R_(std::move(R)) {
  if (Q_.rows() != Q_.cols() || Q_.rows() == 0)
    throw std::invalid_argument("Q must be square, got " + shape(Q_));
  if (R_.rows() != R_.cols() || R_.rows() == 0)
    throw std::invalid_argument("R must be square, got " + shape(R_));
  if (max_asymmetry(Q_) > kSymmetryTol)
    throw std::invalid_argument("Q must be symmetric");
  if (max_asymmetry(R_) > kSymmetryTol)
    throw std::invalid_argument("R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("R not positive definite");
}

QuadraticCost QuadraticCost::WithValueMatrix(Eigen::MatrixXd S) const {
  if (S.rows() != Q_.rows() || S.cols() != Q_.cols())
    throw std::invalid_argument("S must match Q, got " + shape(S));
  QuadraticCost out = *this;
  out.S_ = std::move(S);
  return out;
}

Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& C) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd O(C.rows() * n, n);
  Eigen::MatrixXd block = C;
  for (Eigen::Index k = 0; k < n; ++k) {
    O.middleRows(k * C.rows(), C.rows()) = block;
    block = block * A;
  }
  return O;
}

bool is_hurwitz(const Eigen::MatrixXd& M) {
  return M.eigenvalues().real().maxCoeff() < 0.0;
}

double care_residual(const LtiSystem& system, const QuadraticCost& cost,
                     const Eigen::MatrixXd& S) {
  const Eigen::MatrixXd& A = system.A();
  const Eigen::MatrixXd& B = system.B();
  const Eigen::MatrixXd RinvBt = cost.R().llt().solve(B.transpose());
  return (A.transpose() * S + S * A - S * B * RinvBt * S + cost.Q()).norm();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  // vec(A'X + XA) = (I (x) A' + A' (x) I) vec(X), column-major vec.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) += I(i, j) * At;
      K.block(i * n, j * n, n, n) += At(i, j) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(M.data(), n * n);
  const Eigen::VectorXd x = K.partialPivLu().solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

Eigen::MatrixXd solve_care(const LtiSystem& system, const QuadraticCost& cost) {
  const Eigen::MatrixXd& A = system.A();
  const Eigen::MatrixXd& B = system.B();
  const Eigen::MatrixXd& Q = cost.Q();
  const Eigen::MatrixXd& R = cost.R();
  if (Q.rows() != system.n() || R.rows() != system.m())
    throw std::invalid_argument("cost dimensions do not match the system");
  Eigen::LLT<Eigen::MatrixXd> R_llt(R);
  if (R_llt.info() != Eigen::Success)
    throw std::invalid_argument("R not positive definite");

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(system.m(), system.n());
  if (!is_hurwitz(A)) {
    // Bass's stabilizing start: with (A + bI) X + X (A + bI)' = 2 B B' and
    // b above the spectral radius of A, K = B' X^{-1} puts every eigenvalue
    // of A - B K on Re = -b.
    const double beta = A.norm() + 1.0;
    const Eigen::MatrixXd Ab =
        A + beta * Eigen::MatrixXd::Identity(system.n(), system.n());
    const Eigen::MatrixXd X = solve_lyapunov(-Ab.transpose(), 2.0 * B * B.transpose());
    Eigen::LDLT<Eigen::MatrixXd> x_ldlt(X);
    if (x_ldlt.info() == Eigen::Success && x_ldlt.isPositive())
      K = x_ldlt.solve(B).transpose();
    if (!K.allFinite() || !is_hurwitz(A - B * K))
      throw std::runtime_error("ARE solver failed: no stabilizing initial gain");
  }

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(system.n(), system.n());
  for (int it = 0; it < kNewtonIterations; ++it) {
    const Eigen::MatrixXd Acl = A - B * K;
    const Eigen::MatrixXd S_next =
        solve_lyapunov(Acl, Q + K.transpose() * R * K);
    const double delta = (S_next - S).norm();
    S = S_next;
    K = R_llt.solve(B.transpose() * S);
    if (!S.allFinite()) break;
    if (it > 0 && delta < kNewtonTol * std::max(1.0, S.norm())) break;
  }
  // Iterates can stall at rounding level above the step tolerance, so the
  // residual bound, relative to the size of the terms, decides success.
  double residual = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  if (S.allFinite()) {
    residual = care_residual(system, cost, S);
    const Eigen::MatrixXd RinvBt = R_llt.solve(B.transpose());
    scale = std::max({1.0, 2.0 * (A.transpose() * S).norm(), (S * B * RinvBt * S).norm(),
                      Q.norm()});
  }
  if (!(residual < kCareResidualTol * scale)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", residual);
    throw std::runtime_error(std::string("ARE solver failed (residual ") + buf + ")");
  }
  return S;
}

QuadraticCost with_care_solution(const LtiSystem& system, const QuadraticCost& cost) {
  return cost.WithValueMatrix(solve_care(system, cost));
}

Eigen::MatrixXd lqr_gain(const LtiSystem& system, const QuadraticCost& cost) {
  if (!cost.S()) throw std::logic_error("call solve_care first");
  return cost.R().llt().solve(system.B().transpose() * (*cost.S()));
}

double pole_mismatch(const Eigen::MatrixXd& M,
                     const std::vector<std::complex<double>>& poles) {
  const Eigen::VectorXcd eig = M.eigenvalues();
  std::vector<bool> used(static_cast<std::size_t>(eig.size()), false);
  double worst = 0.0;
  for (const auto& p : poles) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_i = -1;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double d = std::abs(eig(i) - p);
      if (d < best) {
        best = d;
        best_i = i;
      }
    }
    if (best_i < 0) return std::numeric_limits<double>::infinity();
    used[static_cast<std::size_t>(best_i)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

Eigen::MatrixXd place_observer_gain(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& C,
                                    const std::vector<std::complex<double>>& poles) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || C.cols() != n)
    throw std::invalid_argument("place_observer_gain: inconsistent dimensions");
  if (static_cast<Eigen::Index>(poles.size()) != n)
    throw std::invalid_argument("place_observer_gain: need exactly n poles");
  const auto targets = separate_repeated(poles);
  const Eigen::VectorXd coeffs = monic_coefficients(targets);
  // Duplicates were moved apart by 1e-6, so allow that much extra slack.
  const double tol =
      targets == poles ? kPoleTol : kPoleTol + kRepeatedPoleShift * static_cast<double>(n);

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int draws = C.rows() == 1 ? 1 : kOutputCombinationDraws;
  for (int attempt = 0; attempt < draws; ++attempt) {
    Eigen::VectorXd v(C.rows());
    if (C.rows() == 1) {
      v(0) = 1.0;
    } else {
      // Rows of C that are identically zero carry no information; leaving
      // them out keeps the gain from injecting whatever noise they carry.
      for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = C.row(i).cwiseAbs().maxCoeff() > 0.0 ? normal(rng) : 0.0;
      if (v.norm() == 0.0) continue;
      v.normalize();
    }
    const Eigen::RowVectorXd c = v.transpose() * C;
    const auto l = place_single_output(A, c, coeffs);
    if (!l) continue;
    Eigen::MatrixXd K = (*l) * v.transpose();
    if (pole_mismatch(A - K * C, poles) <= tol) return K;
  }
  throw std::runtime_error("pole placement infeasible");
}

}  // namespace irlobs
