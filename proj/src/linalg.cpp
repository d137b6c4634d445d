#include "irlobs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irlobs {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return Eigen::VectorXd();
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues();
}

namespace {

double rank_threshold(const Eigen::MatrixXd& M, double sigma_max) {
  return sigma_max * static_cast<double>(std::max(M.rows(), M.cols())) *
         kRankTolerance;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& M) {
  const Eigen::VectorXd s = singular_values(M);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = rank_threshold(M, s(0));
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

double gram_condition_number(const Eigen::MatrixXd& M) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (M.rows() < M.cols() || M.cols() == 0) return kInf;
  const Eigen::VectorXd s = singular_values(M);
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (smax == 0.0 || smin <= rank_threshold(M, smax)) return kInf;
  const double ratio = smax / smin;
  return ratio * ratio;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = s(0) * kRankTolerance;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return singular_values(M)(0);
}

double max_asymmetry(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return (M - M.transpose()).cwiseAbs().maxCoeff();
}

bool all_finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

}  // namespace irlobs
