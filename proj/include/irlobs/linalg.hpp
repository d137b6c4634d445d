#pragma once

#include <Eigen/Dense>

namespace irlobs {

/// Relative cutoff used for every numerical rank decision in the library:
/// singular values at or below  sigma_max * max(rows, cols) * kRankTolerance
/// count as zero.
inline constexpr double kRankTolerance = 1e-12;

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M);

int numerical_rank(const Eigen::MatrixXd& M);

/// cond(M'M) = (sigma_max / sigma_min)^2, or +infinity when M does not have
/// full column rank.
double gram_condition_number(const Eigen::MatrixXd& M);

/// SVD pseudo-inverse; singular values below sigma_max * 1e-12 are dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M);

double spectral_norm(const Eigen::MatrixXd& M);

double max_asymmetry(const Eigen::MatrixXd& M);

bool all_finite(const Eigen::MatrixXd& M);

}  // namespace irlobs
