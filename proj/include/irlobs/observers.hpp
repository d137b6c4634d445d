#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "irlobs/features.hpp"
#include "irlobs/history_stack.hpp"
#include "irlobs/lti.hpp"

namespace irlobs {

enum class ObserverVariant { kMlo, kHso, kHsoKf };

std::string to_string(ObserverVariant v);
/// Accepts "mlo", "hso", "hso-kf" (also "hso_kf"); throws std::invalid_argument.
ObserverVariant parse_variant(const std::string& s);

/// Time-varying weight gain K4(t) for the history-stack observer.
struct K4Schedule {
  enum class Kind { kConstant, kExponential, kKalman };
  Kind kind = Kind::kConstant;
  double a = 0.0;
  double b = 0.0;
  double k = 1.0;

  static K4Schedule Constant(double k);
  /// (1 - a exp(-b t)) k I.
  static K4Schedule Exponential(double a, double b, double k);
  static K4Schedule Kalman();

  /// Throws std::invalid_argument("schedule violates SPD hypothesis") for
  /// k <= 0 or a >= 1 (and b < 0 for the exponential form).
  void validate() const;
  double scalar(double t) const;
  /// Lower and upper bounds of scalar(t) over t >= 0.
  double lower_bound() const;
  double upper_bound() const;
};

/// k4_schedule(t) as a d x d matrix.
Eigen::MatrixXd k4_schedule(double t, const K4Schedule& schedule, int d);

enum class MloScheme {
  /// Weight block solved in closed form over each step with the regressor
  /// frozen at the sampled (x_hat, u).
  kExactHold,
  /// Literal RK4 on the joint (x_hat, W) field, gamma re-evaluated per stage.
  kRk4,
};

struct GainConfig {
  ObserverVariant variant = ObserverVariant::kHso;
  Eigen::MatrixXd K1;  // n x L output injection (K3 for the stack observer)
  Eigen::MatrixXd K2;  // d x d, memoryless observer only
  double nu = 1.0;
  MloScheme mlo_scheme = MloScheme::kExactHold;
  K4Schedule k4;

  /// Weight updates stay off until the stack is full rank; with a finite
  /// value here the stack must additionally satisfy cond(S'S) <= limit.
  double gate_max_condition = std::numeric_limits<double>::infinity();
  /// With false, a rank-deficient stack makes hso_step throw instead of
  /// freezing the weights.
  bool gate_enabled = true;

  // Kalman variant. R_meas_w has N(1+m) rows.
  Eigen::MatrixXd R_meas_x;
  Eigen::MatrixXd R_meas_w;
  Eigen::MatrixXd Q_proc_x;
  Eigen::MatrixXd Q_proc_w;

  /// Checks the hypotheses of the selected variant against the model:
  /// A - K1 C Hurwitz, K2 SPD, K4 schedule SPD, KF covariances symmetric with
  /// R positive definite. Throws std::invalid_argument naming the field.
  void validate(const LtiSystem& system, const CostParameterization& param,
                int stack_capacity) const;
};

struct KfCovariances {
  Eigen::MatrixXd P_x;
  Eigen::MatrixXd P_w;
};

struct ObserverState {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd w_hat;  // estimated weights only, length d
  double t = 0.0;
  std::optional<KfCovariances> kf;
};

/// Bundle of what every observer needs to know about the observed agent.
struct IrlModel {
  LtiSystem system;
  CostParameterization param;
  double r1 = 1.0;
};

/// One sampled measurement. `u` drives the model propagation; the features
/// use u - u_exc, the policy component, because the probing signal is known
/// to the observer. An empty u_exc means zero.
struct Measurement {
  Eigen::VectorXd y;
  Eigen::VectorXd u;
  Eigen::VectorXd u_exc;

  Eigen::VectorXd policy_u() const;
};

class ObserverDiverged : public std::runtime_error {
 public:
  explicit ObserverDiverged(double t);
  double time() const { return t_; }

 private:
  double t_;
};

/// Luenberger part shared by the observers: A x_hat + B u + K1 (y - C x_hat).
Eigen::VectorXd state_observer_derivative(const Eigen::VectorXd& x_hat,
                                          const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& u,
                                          const Eigen::MatrixXd& K1,
                                          const LtiSystem& system);

/// Weight-block right-hand side of the memoryless observer,
/// gamma K2 g'(sigma_u - g W) with gamma = 1 / (nu |g'g| + 1).
Eigen::VectorXd mlo_weight_derivative(const Eigen::VectorXd& w, const Eigen::MatrixXd& g,
                                      const Eigen::VectorXd& sigma_u,
                                      const Eigen::MatrixXd& K2, double nu);

/// Exact solution of the weight block over dt with g and sigma_u frozen.
Eigen::VectorXd mlo_weight_hold_update(const Eigen::VectorXd& w, const Eigen::MatrixXd& g,
                                       const Eigen::VectorXd& sigma_u,
                                       const Eigen::MatrixXd& K2, double nu, double dt);

/// One step of the memoryless observer with y held over the step.
/// Throws ObserverDiverged on non-finite results.
ObserverState mlo_step(const ObserverState& state, const Measurement& meas, double dt,
                       const GainConfig& gains, const IrlModel& model);

/// Snapshot of the stack quantities the stack observer needs, refreshed
/// when the stack version changes.
struct StackInnovation {
  bool gate_open = false;
  bool full_rank = false;
  double condition = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd sigma_hat;
  Eigen::VectorXd sigma_u;
  Eigen::MatrixXd pinv;  // (S'S)^{-1} S' via SVD
  std::uint64_t version = 0;
};

StackInnovation prepare_innovation(const HistoryStack& stack, const GainConfig& gains);

/// Weight-block right-hand side K4(t) pinv (sigma_u - sigma_hat W).
Eigen::VectorXd hso_weight_derivative(double t, const Eigen::VectorXd& w,
                                      const StackInnovation& inn, const GainConfig& gains);

/// RK4 over [t, t+dt] of the weight block; identity when the gate is closed.
/// Throws std::runtime_error("stack not full rank") when gating is disabled
/// and the stack is rank-deficient.
Eigen::VectorXd hso_weight_update(double t, const Eigen::VectorXd& w,
                                  const StackInnovation& inn, const GainConfig& gains,
                                  double dt);

/// One step of the stack observer with y held over the step.
ObserverState hso_step(const ObserverState& state, const Measurement& meas,
                       const HistoryStack& stack, double dt, const GainConfig& gains,
                       const IrlModel& model);

struct KfStepResult {
  ObserverState state;
  Eigen::MatrixXd K3;   // n x L
  Eigen::MatrixXd K_w;  // d x N(1+m); zero when gated or skipped
  bool state_update_skipped = false;
  bool weight_update_skipped = false;
};

/// Initial covariances P_x = px I, P_w = pw I.
KfCovariances initial_covariances(int n, int d, double px = 1.0, double pw = 10.0);

/// Kalman-gain stack observer: predict both blocks over dt with input u,
/// then correct the state block with `y_next` (measured at t + dt) and the
/// weight block with the stack innovation. Singular innovation covariances
/// skip that block's correction and set the matching flag.
KfStepResult hso_kf_step(const ObserverState& state, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& y_next, const StackInnovation& inn,
                         double dt, const GainConfig& gains, const IrlModel& model);

/// Sliding-window Gramian of the regressor, sum over the window of g'g dt.
/// Its smallest eigenvalue is a practical persistence-of-excitation level.
class PeMonitor {
 public:
  PeMonitor(double window, double dt);
  void push(const Eigen::MatrixXd& g);
  double min_eigenvalue() const;
  bool window_filled() const;

 private:
  std::size_t capacity_;
  double dt_;
  std::deque<Eigen::MatrixXd> terms_;
};

}  // namespace irlobs
