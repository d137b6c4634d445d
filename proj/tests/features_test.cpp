#include "irlobs/features.hpp"

#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace irlobs {
namespace {

using testing::random_matrix;
using testing::random_spd;
using testing::random_vector;

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
  const Eigen::MatrixXd M = random_matrix(rng, n, n);
  return 0.5 * (M + M.transpose());
}

TEST(Parameterization, Sizes) {
  const CostParameterization full(QParameterization::kFullSymmetric, 2, 1);
  EXPECT_EQ(full.weight_dim(), 6);
  const CostParameterization diag(QParameterization::kDiagonalQ, 2, 1);
  EXPECT_EQ(diag.weight_dim(), 5);
  const CostParameterization four(QParameterization::kDiagonalQ, 4, 2);
  EXPECT_EQ(four.weight_dim(), 10 + 4 + 2);
  EXPECT_THROW(CostParameterization(QParameterization::kDiagonalQ, 0, 1),
               std::invalid_argument);
}

TEST(Parameterization, PairIndexOrder) {
  int expected = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      EXPECT_EQ(pair_index(i, j, 4), expected);
      EXPECT_EQ(pair_index(j, i, 4), expected);
      ++expected;
    }
}

TEST(Features, QuadraticFormsReconstruct) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    const int m = 1 + trial % 3;
    const CostParameterization param(QParameterization::kFullSymmetric, n, m);
    const Eigen::MatrixXd S = random_symmetric(rng, n);
    const Eigen::MatrixXd Q = random_spd(rng, n);
    const Eigen::MatrixXd R = random_spd(rng, m);
    const WeightVector w = pack_weights(QuadraticCost(Q, R), S, param);
    const Eigen::VectorXd x = random_vector(rng, n, 2.0);
    const Eigen::VectorXd u = random_vector(rng, m, 2.0);
    const double scale = 1.0 + x.squaredNorm() + u.squaredNorm();
    EXPECT_NEAR(w.w_v.dot(sigma_v(x)), x.dot(S * x), 1e-12 * scale * (1 + S.norm()));
    EXPECT_NEAR(w.w_q.dot(sigma_q(x, param)), x.dot(Q * x), 1e-12 * scale * Q.norm());
    Eigen::VectorXd r(param.M());
    r << w.r1, w.w_r_minus;
    EXPECT_NEAR(r.dot(sigma_r1(u)), u.dot(R * u), 1e-12 * scale * R.norm());
    // The control matrix reproduces R u for every symmetric R.
    EXPECT_LT((sigma_r2(u) * r - R * u).norm(), 1e-12 * scale * R.norm());

    const CostMatrices back = unpack_weights(w, param);
    EXPECT_EQ((back.S - S).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((back.Q - Q).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((back.R - R).cwiseAbs().maxCoeff(), 0.0);
    const WeightVector again = WeightVector::FromStacked(w.stacked(), w.r1, param);
    EXPECT_EQ(again.stacked(), w.stacked());
  }
}

TEST(Features, DiagonalQ) {
  const CostParameterization param(QParameterization::kDiagonalQ, 3, 1);
  const Eigen::Vector3d x(1, -2, 3);
  EXPECT_EQ(sigma_q(x, param), Eigen::Vector3d(1, 4, 9));
  Eigen::MatrixXd Q = Eigen::Vector3d(1, 2, 3).asDiagonal();
  const QuadraticCost good(Q, Eigen::MatrixXd::Identity(1, 1));
  EXPECT_NO_THROW(pack_weights(good, Q, param));
  Q(0, 2) = Q(2, 0) = 0.1;
  try {
    pack_weights(QuadraticCost(Q, Eigen::MatrixXd::Identity(1, 1)), Q, param);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "Q not diagonal");
  }
}

TEST(Features, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const Eigen::VectorXd x = random_vector(rng, n, 3.0);
    const Eigen::MatrixXd fd = testing::numeric_jacobian(
        [](const Eigen::VectorXd& z) { return sigma_v(z); }, x, 1e-5);
    EXPECT_LT((grad_sigma_v(x) - fd).cwiseAbs().maxCoeff(), 1e-7) << "trial " << trial;
  }
}

TEST(Features, ResidualsMatchDirectBellmanExpressions) {
  // For arbitrary (S, Q, R, x, u):
  //   delta   = 2 x'S(Ax+Bu) + x'Qx + u'Ru
  //   delta_u = 2 B'S x + 2 R u
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % 2;
    const LtiSystem sys(random_matrix(rng, n, n), random_matrix(rng, n, m),
                        Eigen::MatrixXd::Identity(n, n));
    const CostParameterization param(QParameterization::kFullSymmetric, n, m);
    const Eigen::MatrixXd S = random_symmetric(rng, n);
    const Eigen::MatrixXd Q = random_spd(rng, n);
    const Eigen::MatrixXd R = random_spd(rng, m);
    const WeightVector w = pack_weights(QuadraticCost(Q, R), S, param);
    const Eigen::VectorXd x = random_vector(rng, n);
    const Eigen::VectorXd u = random_vector(rng, m);
    const BellmanResidual r = inverse_bellman_error(x, u, w, sys, param);
    const double delta =
        2.0 * x.dot(S * (sys.A() * x + sys.B() * u)) + x.dot(Q * x) + u.dot(R * u);
    const Eigen::VectorXd delta_u = 2.0 * sys.B().transpose() * S * x + 2.0 * R * u;
    EXPECT_NEAR(r.delta, delta, 1e-10 * (1 + std::abs(delta)));
    EXPECT_LT((r.delta_u - delta_u).norm(), 1e-10 * (1 + delta_u.norm()));

    // The stacked regressor and target encode the same residuals.
    const Eigen::VectorXd res = g_matrix(x, u, sys, param) * w.stacked() -
                                sigma_u_vec(u(0), w.r1, m);
    EXPECT_NEAR(res(0), delta, 1e-10 * (1 + std::abs(delta)));
    EXPECT_LT((res.tail(m) - delta_u).norm(), 1e-10 * (1 + delta_u.norm()));
  }
}

TEST(Features, ResidualsVanishAlongOptimalPairs) {
  for (int which = 0; which < 2; ++which) {
    const LtiSystem sys = which == 0 ? testing::two_state_system() : testing::four_state_system();
    const QuadraticCost cost = with_care_solution(
        sys, which == 0 ? testing::two_state_cost() : testing::four_state_cost());
    const CostParameterization param(QParameterization::kDiagonalQ, sys.n(), sys.m());
    const WeightVector w = pack_weights(cost, param);
    const Eigen::MatrixXd K = lqr_gain(sys, cost);
    std::mt19937_64 rng(21 + which);
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd x = random_vector(rng, sys.n(), 3.0);
      const BellmanResidual r = inverse_bellman_error(x, -K * x, w, sys, param);
      EXPECT_NEAR(r.delta, 0.0, 1e-9 * (1 + x.squaredNorm()));
      EXPECT_LT(r.delta_u.norm(), 1e-9 * (1 + x.norm()));
    }
  }
}

TEST(Features, ScalingAmbiguityAndTrivialSolution) {
  const LtiSystem sys = testing::two_state_system();
  const QuadraticCost cost = with_care_solution(sys, testing::two_state_cost());
  const CostParameterization param(QParameterization::kDiagonalQ, 2, 1);
  const Eigen::MatrixXd K = lqr_gain(sys, cost);
  const CostMatrices ideal{*cost.S(), cost.Q(), cost.R()};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = random_vector(rng, 2, 3.0);
    const Eigen::VectorXd u = -K * x;
    const double c = scale(rng);
    const CostMatrices scaled{c * ideal.S, c * ideal.Q, c * ideal.R};
    const BellmanResidual r = unscaled_bellman_error(x, u, scaled, sys, param);
    EXPECT_NEAR(r.delta, 0.0, 1e-9 * c * (1 + x.squaredNorm()));
    EXPECT_LT(r.delta_u.norm(), 1e-9 * c * (1 + x.norm()));

    const CostMatrices zero{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2),
                            Eigen::MatrixXd::Zero(1, 1)};
    const BellmanResidual z = unscaled_bellman_error(x, u, zero, sys, param);
    EXPECT_EQ(z.delta, 0.0);
    EXPECT_EQ(z.delta_u.norm(), 0.0);

    // Fixing r1 removes both: the zero estimate leaves a residual of u1^2 r1.
    WeightVector w0 = pack_weights(cost, param);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(param.weight_dim());
    w0 = WeightVector::FromStacked(zeros, w0.r1, param);
    const BellmanResidual fixed = inverse_bellman_error(x, u, w0, sys, param);
    EXPECT_NEAR(fixed.delta, u(0) * u(0) * cost.R()(0, 0), 1e-12 * (1 + u.squaredNorm()));
    EXPECT_NEAR(fixed.delta_u(0), 2.0 * u(0) * cost.R()(0, 0), 1e-12 * (1 + u.norm()));
  }
}

TEST(Features, DimensionErrors) {
  const CostParameterization param(QParameterization::kDiagonalQ, 2, 1);
  EXPECT_THROW(WeightVector::FromStacked(Eigen::VectorXd::Zero(4), 1.0, param),
               std::invalid_argument);
  EXPECT_THROW(WeightVector::FromStacked(Eigen::VectorXd::Zero(5), 0.0, param),
               std::invalid_argument);
  WeightVector w = WeightVector::FromStacked(Eigen::VectorXd::Zero(5), 1.0, param);
  w.w_q = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(unpack_weights(w, param), std::invalid_argument);
  EXPECT_THROW(sigma_delta(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(1),
                           testing::two_state_system(), param),
               std::invalid_argument);
}

}  // namespace
}  // namespace irlobs
