#include "irlobs/observers.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "irlobs/integrator.hpp"
#include "irlobs/linalg.hpp"
#include "test_support.hpp"

namespace irlobs {
namespace {

using testing::random_vector;

struct TwoState {
  LtiSystem sys = testing::two_state_system();
  QuadraticCost cost = with_care_solution(sys, testing::two_state_cost());
  CostParameterization param{QParameterization::kDiagonalQ, 2, 1};
  IrlModel model{sys, param, 1.5};
  Eigen::MatrixXd K = lqr_gain(sys, cost);
  Eigen::VectorXd w_star = pack_weights(cost, param).stacked();

  double probe(double t) const {
    return 5 * std::sin(t) + 18 * std::cos(0.4 * t) + 36 * std::sin(2 * t) +
           0.5 * std::cos(3 * t);
  }

  // Stack filled from the true state of an excited optimal trajectory.
  HistoryStack true_stack(double horizon = 2.0) const {
    HistoryStack s(sys, param, model.r1);
    Eigen::VectorXd x = Eigen::Vector2d(1.0, 1.0);
    const double dt = 0.005;
    for (int k = 0; k * dt < horizon; ++k) {
      const double t = k * dt;
      const Eigen::VectorXd u_pol = -K * x;
      s.offer_sample(x, u_pol, t, x);
      s.purge_and_refresh(t);
      const Eigen::VectorXd u = u_pol + Eigen::VectorXd::Constant(1, probe(t));
      x = integrate_step([&](double, const Eigen::VectorXd& z) {
            return Eigen::VectorXd(sys.A() * z + sys.B() * u);
          }, t, x, dt);
    }
    return s;
  }
};

TEST(Variant, ParseAndPrint) {
  EXPECT_EQ(parse_variant("mlo"), ObserverVariant::kMlo);
  EXPECT_EQ(parse_variant("hso_kf"), ObserverVariant::kHsoKf);
  EXPECT_EQ(to_string(parse_variant("hso-kf")), "hso-kf");
  EXPECT_THROW(parse_variant("kf"), std::invalid_argument);
}

TEST(K4Schedule, Values) {
  const K4Schedule e = K4Schedule::Exponential(0.9, 1.0, 0.5);
  EXPECT_LT((k4_schedule(0.0, e, 3) - 0.05 * Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-15);
  EXPECT_NEAR(e.scalar(60.0), 0.5, 1e-15);
  EXPECT_NEAR(e.scalar(1.0), (1 - 0.9 * std::exp(-1.0)) * 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(e.lower_bound(), 0.05);
  EXPECT_DOUBLE_EQ(e.upper_bound(), 0.5);
  EXPECT_EQ(k4_schedule(7.0, K4Schedule::Constant(1.0), 2), Eigen::MatrixXd::Identity(2, 2));
}

TEST(K4Schedule, RejectsNonSpd) {
  for (const K4Schedule& s : {K4Schedule::Exponential(1.0, 1.0, 0.5),
                              K4Schedule::Exponential(0.5, 1.0, 0.0),
                              K4Schedule::Constant(-1.0)}) {
    try {
      s.validate();
      FAIL();
    } catch (const std::invalid_argument& e) {
      EXPECT_STREQ(e.what(), "schedule violates SPD hypothesis");
    }
  }
}

TEST(GainConfig, Validation) {
  TwoState f;
  GainConfig g;
  g.variant = ObserverVariant::kMlo;
  g.K1 = place_observer_gain(f.sys, {{-2, 0}, {-4, 0}});
  g.K2 = 1e4 * Eigen::MatrixXd::Identity(5, 5);
  EXPECT_NO_THROW(g.validate(f.sys, f.param, 5));
  g.K2(0, 0) = -1.0;
  EXPECT_THROW(g.validate(f.sys, f.param, 5), std::invalid_argument);
  g.K2 = 1e4 * Eigen::MatrixXd::Identity(5, 5);
  g.K1 = Eigen::MatrixXd::Zero(2, 1);  // A itself is unstable
  EXPECT_THROW(g.validate(f.sys, f.param, 5), std::invalid_argument);
}

TEST(Mlo, FixedPointAtIdealWeights) {
  TwoState f;
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd K2 = 1e4 * Eigen::MatrixXd::Identity(5, 5);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd x = random_vector(rng, 2, 3.0);
    const Eigen::VectorXd u = -f.K * x;
    const Eigen::MatrixXd g = g_matrix(x, u, f.sys, f.param);
    const Eigen::VectorXd su = sigma_u_vec(u(0), f.model.r1, 1);
    EXPECT_LT(mlo_weight_derivative(f.w_star, g, su, K2, 1.0).norm(), 1e-8);
    EXPECT_LT((mlo_weight_hold_update(f.w_star, g, su, K2, 0.01, 0.005) - f.w_star).norm(),
              1e-8);
  }
}

TEST(Mlo, HoldUpdateMatchesFineIntegration) {
  TwoState f;
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd K2 = testing::random_spd(rng, 5, 1.0) * 10.0;
    const Eigen::VectorXd x = random_vector(rng, 2);
    const Eigen::VectorXd u = random_vector(rng, 1);
    const Eigen::MatrixXd g = g_matrix(x, u, f.sys, f.param);
    const Eigen::VectorXd su = sigma_u_vec(u(0), f.model.r1, 1);
    const Eigen::VectorXd w0 = random_vector(rng, 5);
    const double nu = 0.1, dt = 0.005;
    const Eigen::VectorXd fine = integrate_substeps(
        [&](double, const Eigen::VectorXd& w) {
          return mlo_weight_derivative(w, g, su, K2, nu);
        }, 0.0, w0, dt, 2000);
    const Eigen::VectorXd held = mlo_weight_hold_update(w0, g, su, K2, nu, dt);
    EXPECT_LT((held - fine).norm(), 1e-9 * (1 + fine.norm())) << "case " << k;
  }
}

TEST(Mlo, ZeroGainsPropagateOpenLoop) {
  TwoState f;
  GainConfig g;
  g.variant = ObserverVariant::kMlo;
  g.mlo_scheme = MloScheme::kRk4;
  g.K1 = Eigen::MatrixXd::Zero(2, 1);
  g.K2 = Eigen::MatrixXd::Zero(5, 5);
  std::mt19937_64 rng(3);
  ObserverState s{Eigen::Vector2d(0.4, -0.2), random_vector(rng, 5), 1.0, {}};
  const Measurement meas{Eigen::VectorXd::Constant(1, 9.0), Eigen::VectorXd::Constant(1, 0.7), {}};
  const ObserverState next = mlo_step(s, meas, 0.005, g, f.model);
  const Eigen::VectorXd open = integrate_step(
      [&](double, const Eigen::VectorXd& x) {
        return Eigen::VectorXd(f.sys.A() * x + f.sys.B() * meas.u);
      }, 1.0, s.x_hat, 0.005);
  EXPECT_LT((next.x_hat - open).norm(), 1e-14);
  EXPECT_EQ(next.w_hat, s.w_hat);
  EXPECT_DOUBLE_EQ(next.t, 1.005);
}

TEST(Mlo, DivergenceIsReported) {
  TwoState f;
  GainConfig g;
  g.variant = ObserverVariant::kMlo;
  g.K1 = Eigen::MatrixXd::Zero(2, 1);
  g.K2 = Eigen::MatrixXd::Identity(5, 5);
  ObserverState s{Eigen::Vector2d(1e308, 1e308), Eigen::VectorXd::Zero(5), 2.0, {}};
  const Measurement meas{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), {}};
  try {
    mlo_step(s, meas, 0.005, g, f.model);
    FAIL();
  } catch (const ObserverDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("observer diverged"), std::string::npos);
  }
}

TEST(Hso, FixedPointOnTrueStack) {
  TwoState f;
  const HistoryStack s = f.true_stack();
  ASSERT_TRUE(s.is_full_rank());
  GainConfig g;
  g.k4 = K4Schedule::Constant(1.0);
  const StackInnovation inn = prepare_innovation(s, g);
  EXPECT_LT(hso_weight_derivative(0.0, f.w_star, inn, g).norm(), 1e-8);
}

TEST(Hso, ErrorDecaysAtGainRate) {
  // With a true-state stack the weight error obeys W~' = -K4 W~ exactly.
  TwoState f;
  const HistoryStack s = f.true_stack();
  GainConfig g;
  g.k4 = K4Schedule::Constant(1.0);
  const StackInnovation inn = prepare_innovation(s, g);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
  const double e0 = (w - f.w_star).norm();
  const double dt = 0.005;
  for (int k = 1; k <= 600; ++k) {
    w = hso_weight_update((k - 1) * dt, w, inn, g, dt);
    const double ratio = (w - f.w_star).norm() / (e0 * std::exp(-k * dt));
    ASSERT_NEAR(ratio, 1.0, 0.02) << "t = " << k * dt;
  }
}

TEST(Hso, GateFreezesWeightsBitwise) {
  TwoState f;
  HistoryStack s(f.sys, f.param, f.model.r1);
  s.offer_sample(Eigen::Vector2d(1, 0), Eigen::VectorXd::Constant(1, 1.0), 0.0);
  GainConfig g;
  g.K1 = place_observer_gain(f.sys, {{-2, 0}, {-4, 0}});
  std::mt19937_64 rng(5);
  const Eigen::VectorXd w = random_vector(rng, 5);
  const StackInnovation inn = prepare_innovation(s, g);
  EXPECT_FALSE(inn.gate_open);
  const Eigen::VectorXd next = hso_weight_update(0.0, w, inn, g, 0.005);
  EXPECT_EQ(std::memcmp(next.data(), w.data(), sizeof(double) * 5), 0);

  ObserverState st{Eigen::Vector2d(0.1, 0.2), w, 0.0, {}};
  const Measurement meas{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0), {}};
  const ObserverState after = hso_step(st, meas, s, 0.005, g, f.model);
  EXPECT_EQ(std::memcmp(after.w_hat.data(), w.data(), sizeof(double) * 5), 0);

  g.gate_enabled = false;
  try {
    hso_weight_update(0.0, w, inn, g, 0.005);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "stack not full rank");
  }
}

TEST(Hso, ConditionGate) {
  TwoState f;
  const HistoryStack s = f.true_stack();
  GainConfig g;
  g.gate_max_condition = s.condition_number() * 0.5;
  EXPECT_FALSE(prepare_innovation(s, g).gate_open);
  g.gate_max_condition = s.condition_number() * 2.0;
  EXPECT_TRUE(prepare_innovation(s, g).gate_open);
}

// n = 1 agent x' = a x + u, y = x; the weight block has d = 2.
struct Scalar {
  LtiSystem sys{Eigen::MatrixXd::Constant(1, 1, -0.5), Eigen::MatrixXd::Constant(1, 1, 1.0),
                Eigen::MatrixXd::Constant(1, 1, 1.0)};
  CostParameterization param{QParameterization::kDiagonalQ, 1, 1};
  IrlModel model{sys, param, 1.0};
};

GainConfig scalar_kf_gains(double rx, double rw, int rows) {
  GainConfig g;
  g.variant = ObserverVariant::kHsoKf;
  g.K1 = Eigen::MatrixXd::Zero(1, 1);
  g.k4 = K4Schedule::Kalman();
  g.R_meas_x = Eigen::MatrixXd::Constant(1, 1, rx);
  g.R_meas_w = rw * Eigen::MatrixXd::Identity(rows, rows);
  g.Q_proc_x = Eigen::MatrixXd::Constant(1, 1, 0.3);
  g.Q_proc_w = 1e-8 * Eigen::MatrixXd::Identity(2, 2);
  return g;
}

TEST(HsoKf, ScalarStateGainClosedForm) {
  Scalar f;
  const double a = -0.5, dt = 0.01, p0 = 2.0, q = 0.3, r = 0.04;
  const GainConfig g = scalar_kf_gains(r, 1.0, 2);
  ObserverState s{Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Zero(2), 0.0,
                  initial_covariances(1, 2, p0, 10.0)};
  const KfStepResult res = hso_kf_step(s, Eigen::VectorXd::Constant(1, 0.5),
                                       Eigen::VectorXd::Constant(1, 0.9), StackInnovation{}, dt,
                                       g, f.model);
  const double z = a * dt;
  const double phi = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
  const double p_pred = phi * phi * p0 + q * dt;
  const double k = p_pred / (p_pred + r);
  EXPECT_NEAR(res.K3(0, 0), k, 1e-10);
  EXPECT_NEAR(res.state.kf->P_x(0, 0), (1 - k) * p_pred, 1e-10);
  const double x_pred = phi * 0.2 + dt * (1 + z / 2 + z * z / 6 + z * z * z / 24) * 0.5;
  EXPECT_NEAR(res.state.x_hat(0), x_pred + k * (0.9 - x_pred), 1e-12);
  EXPECT_FALSE(res.state_update_skipped);
}

TEST(HsoKf, WeightGainMatchesCovarianceForm) {
  Scalar f;
  std::mt19937_64 rng(6);
  HistoryStack s(f.sys, f.param, f.model.r1);
  for (int k = 0; k < 5; ++k)
    s.offer_sample(random_vector(rng, 1), random_vector(rng, 1), 0.1 * k);
  ASSERT_TRUE(s.is_full_rank());
  const double rw = 0.05, pw = 3.0, dt = 0.01;
  const GainConfig g = scalar_kf_gains(0.1, rw, 10);
  const StackInnovation inn = prepare_innovation(s, g);
  const Eigen::VectorXd w0 = random_vector(rng, 2);
  ObserverState st{Eigen::VectorXd::Zero(1), w0, 0.0, initial_covariances(1, 2, 1.0, pw)};
  const KfStepResult res = hso_kf_step(st, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                                       inn, dt, g, f.model);
  const Eigen::MatrixXd P = (pw + 1e-8 * dt) * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd& H = inn.sigma_hat;
  const Eigen::MatrixXd Sinv =
      (H * P * H.transpose() + rw * Eigen::MatrixXd::Identity(10, 10)).inverse();
  const Eigen::MatrixXd Kw = P * H.transpose() * Sinv;
  EXPECT_LT((res.K_w - Kw).norm(), 1e-8 * (1 + Kw.norm()));
  const Eigen::VectorXd w1 = w0 + Kw * (inn.sigma_u - H * w0);
  EXPECT_LT((res.state.w_hat - w1).norm(), 1e-8 * (1 + w1.norm()));
  const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(2, 2) - Kw * H;
  const Eigen::MatrixXd Pj = IKH * P * IKH.transpose() + Kw * (rw * Kw.transpose());
  EXPECT_LT((res.state.kf->P_w - Pj).norm(), 1e-8 * (1 + Pj.norm()));
}

TEST(HsoKf, HugeMeasurementNoiseMeansNoCorrection) {
  Scalar f;
  std::mt19937_64 rng(7);
  HistoryStack s(f.sys, f.param, f.model.r1);
  for (int k = 0; k < 5; ++k)
    s.offer_sample(random_vector(rng, 1), random_vector(rng, 1), 0.1 * k);
  const GainConfig g = scalar_kf_gains(1e12, 1e12, 10);
  const StackInnovation inn = prepare_innovation(s, g);
  ObserverState st{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Ones(2), 0.0,
                   initial_covariances(1, 2)};
  const KfStepResult res = hso_kf_step(st, Eigen::VectorXd::Zero(1),
                                       Eigen::VectorXd::Constant(1, 50.0), inn, 0.01, g, f.model);
  EXPECT_LT(res.K3.norm(), 1e-10);
  EXPECT_LT(res.K_w.norm(), 1e-9);
  EXPECT_NEAR(res.state.x_hat(0), integrate_step([](double, const Eigen::VectorXd& x) {
                                     return Eigen::VectorXd(-0.5 * x);
                                   }, 0.0, st.x_hat, 0.01)(0),
              1e-9);
  EXPECT_LT((res.state.w_hat - st.w_hat).norm(), 1e-6);
}

TEST(HsoKf, GatedBeforeStackIsFull) {
  Scalar f;
  const GainConfig g = scalar_kf_gains(0.1, 0.1, 10);
  ObserverState st{Eigen::VectorXd::Zero(1), Eigen::Vector2d(0.3, -0.7), 0.0,
                   initial_covariances(1, 2)};
  const KfStepResult res = hso_kf_step(st, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                                       StackInnovation{}, 0.01, g, f.model);
  EXPECT_EQ(res.state.w_hat, st.w_hat);
}

TEST(PeMonitor, GramianOfConstantRegressor) {
  PeMonitor pe(0.5, 0.01);
  Eigen::MatrixXd g(2, 2);
  g << 1, 0, 0, 2;
  for (int k = 0; k < 49; ++k) pe.push(g);
  EXPECT_FALSE(pe.window_filled());
  pe.push(g);
  EXPECT_TRUE(pe.window_filled());
  EXPECT_NEAR(pe.min_eigenvalue(), 0.5, 1e-12);
  pe.push(Eigen::MatrixXd::Zero(2, 2));
  EXPECT_NEAR(pe.min_eigenvalue(), 0.49, 1e-12);
}

}  // namespace
}  // namespace irlobs
