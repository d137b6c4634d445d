#pragma once

#include <Eigen/Dense>

#include "irlobs/lti.hpp"

namespace irlobs {

enum class QParameterization { kFullSymmetric, kDiagonalQ };

/// Sizes of the value, state-cost and control-cost feature blocks.
///
/// The estimated weight vector has length P_V + P_Q + (M - 1): the first
/// control-cost weight r1 is the known scale and never estimated.
struct CostParameterization {
  QParameterization kind = QParameterization::kFullSymmetric;
  int n = 0;
  int m = 0;

  CostParameterization() = default;
  /// Throws std::invalid_argument for n < 1 or m < 1.
  CostParameterization(QParameterization kind, int n, int m);

  int p_v() const { return n * (n + 1) / 2; }
  int p_q() const { return kind == QParameterization::kDiagonalQ ? n : p_v(); }
  int M() const { return m * (m + 1) / 2; }
  int weight_dim() const { return p_v() + p_q() + M() - 1; }
};

/// Index of the pair (i, j), i <= j, in the lexicographic upper-triangle
/// ordering used by every quadratic basis here.
int pair_index(int i, int j, int dim);

struct WeightVector {
  Eigen::VectorXd w_v;
  Eigen::VectorXd w_q;
  Eigen::VectorXd w_r_minus;
  double r1 = 1.0;

  /// [w_v; w_q; w_r_minus].
  Eigen::VectorXd stacked() const;

  /// Inverse of stacked(). Throws std::invalid_argument("dimension error")
  /// when the length does not match the parameterization, or if r1 <= 0.
  static WeightVector FromStacked(const Eigen::VectorXd& w, double r1,
                                  const CostParameterization& param);
};

struct CostMatrices {
  Eigen::MatrixXd S;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

// Quadratic bases. Diagonal pairs contribute x_i^2, cross pairs 2 x_i x_j.
Eigen::VectorXd sigma_v(const Eigen::VectorXd& x);
Eigen::MatrixXd grad_sigma_v(const Eigen::VectorXd& x);
Eigen::VectorXd sigma_q(const Eigen::VectorXd& x, const CostParameterization& param);
Eigen::VectorXd sigma_r1(const Eigen::VectorXd& u);

/// m x M matrix with sigma_r2(u) * pack(R) == R u for every symmetric R:
/// row i carries u_l in the column of the pair (min(i,l), max(i,l)).
Eigen::MatrixXd sigma_r2(const Eigen::VectorXd& u);

/// Ideal weights from (S, Q, R). Each matrix entry (i <= j) maps to one
/// weight; the factor 2 of cross terms lives in the basis. Throws
/// std::invalid_argument("Q not diagonal") under kDiagonalQ when Q has an
/// off-diagonal entry above 1e-12.
WeightVector pack_weights(const QuadraticCost& cost, const Eigen::MatrixXd& S,
                          const CostParameterization& param);

/// Uses cost.S(); throws std::logic_error when it is unset.
WeightVector pack_weights(const QuadraticCost& cost,
                          const CostParameterization& param);

/// Throws std::invalid_argument("dimension error") on length mismatch.
CostMatrices unpack_weights(const WeightVector& w,
                            const CostParameterization& param);

/// Row [(Ax+Bu)' grad_sigma_v', sigma_q', sigma_r1^-'] with sigma_r1^- the
/// control basis without its first (u_1^2) entry.
Eigen::RowVectorXd sigma_delta(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               const LtiSystem& system,
                               const CostParameterization& param);

/// m x d matrix [B' grad_sigma_v', 0, 2 sigma_r2^-] with sigma_r2^- the
/// control matrix without its first column.
Eigen::MatrixXd sigma_delta_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              const LtiSystem& system,
                              const CostParameterization& param);

/// (1+m) x d stack [sigma_delta; sigma_delta_u].
Eigen::MatrixXd g_matrix(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const LtiSystem& system, const CostParameterization& param);

/// (-u1^2 r1, -2 u1 r1, 0, ..., 0) of length 1+m.
Eigen::VectorXd sigma_u_vec(double u1, double r1, int m);

struct BellmanResidual {
  double delta = 0.0;
  Eigen::VectorXd delta_u;
};

/// Scale-fixed residuals: delta = sigma_delta w + u1^2 r1 and
/// delta_u = sigma_delta_u w + (2 u1 r1, 0, ...). Both vanish at the ideal
/// weights along optimal (x, u) pairs.
BellmanResidual inverse_bellman_error(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u,
                                      const WeightVector& w,
                                      const LtiSystem& system,
                                      const CostParameterization& param);

/// Residuals before the scale is fixed, evaluated through the feature bases
/// with every entry of (S, Q, R) treated as a weight (r1 included). They are
/// homogeneous in the weights, so any positive multiple of the ideal triple,
/// and the zero triple, annihilates them.
BellmanResidual unscaled_bellman_error(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u,
                                       const CostMatrices& weights,
                                       const LtiSystem& system,
                                       const CostParameterization& param);

}  // namespace irlobs
