#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irlobs/excitation.hpp"
#include "irlobs/features.hpp"
#include "irlobs/lti.hpp"
#include "irlobs/observers.hpp"

namespace irlobs {

/// Kalman-variant tuning. Measurement covariances default to the injected
/// noise variances, floored so that noise-free runs stay well posed.
struct KalmanSettings {
  double q_proc_x = 1e-6;
  double q_proc_w = 1e-8;
  double r_floor = 1e-10;
  double r_w_scale = 10.0;
  double p_x0 = 1.0;
  double p_w0 = 10.0;
  std::optional<Eigen::MatrixXd> R_meas_x;
  std::optional<Eigen::MatrixXd> R_meas_w;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Eigen::MatrixXd A, B, C, Q, R;
  QParameterization parameterization = QParameterization::kFullSymmetric;
  ExcitationSpec excitation;

  ObserverVariant variant = ObserverVariant::kHso;
  std::vector<std::complex<double>> observer_poles;
  std::optional<Eigen::MatrixXd> K1;  // overrides observer_poles
  double k2 = 1e4;                    // K2 = k2 I
  double nu = 1.0;
  MloScheme mlo_scheme = MloScheme::kExactHold;
  K4Schedule k4 = K4Schedule::Constant(1.0);
  double gate_max_condition = std::numeric_limits<double>::infinity();
  KalmanSettings kalman;

  double dt = 0.005;
  double horizon = 100.0;
  double noise_sd_y = 0.0;
  double noise_sd_u = 0.0;
  double ss_window = 30.0;
  int trials = 1;
  std::uint64_t seed = 0;

  int stack_capacity = 5;
  double purge_interval = 0.5;
  int buffer_size = 200;

  Eigen::VectorXd x0;      // default (1, ..., 1)
  Eigen::VectorXd x_hat0;  // default 0
  Eigen::VectorXd w_hat0;  // default 0

  /// Monte-Carlo sweep axes; empty means just `variant` / the SDs above.
  std::vector<ObserverVariant> variants;
  std::vector<double> noise_levels;  // applied to both y and u

  std::string output_dir;
  bool write_trial_csv = false;
  /// Record stack mismatch and perturbation diagnostics (costs extra
  /// feature evaluations per step).
  bool diagnostics = false;
  int record_every = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  LtiSystem system() const;
  QuadraticCost cost() const;
  CostParameterization param() const;
};

/// Derived quantities shared by every trial of a configuration.
struct ExperimentSetup {
  IrlModel model;
  QuadraticCost cost;  // with S populated
  Eigen::MatrixXd K_star;
  WeightVector w_star;
  GainConfig gains;
};

/// Solves the ARE, places the observer poles and builds the gain set.
ExperimentSetup prepare_experiment(const ExperimentConfig& config);

/// Sum over nonzero ideal weights of |w_hat_i - w_i*| / |w_i*|.
double weight_error_metric(const Eigen::VectorXd& w_hat, const WeightVector& w_star);
double weight_error_metric(const WeightVector& w_hat, const WeightVector& w_star,
                           const CostParameterization& param);

/// Per-weight error: relative where the ideal weight is nonzero, absolute
/// otherwise.
Eigen::VectorXd weight_error_components(const Eigen::VectorXd& w_hat,
                                        const WeightVector& w_star);

struct TrialResult {
  std::uint64_t seed = 0;
  ObserverVariant variant = ObserverVariant::kHso;
  double noise_sd_y = 0.0;
  double noise_sd_u = 0.0;

  // Series sampled after each recorded step.
  std::vector<double> t;
  std::vector<double> metric;
  std::vector<Eigen::VectorXd> wtilde;
  std::vector<Eigen::VectorXd> xtilde;
  std::vector<double> wtilde_norm;  // |W_hat - W*|
  std::vector<double> cond_number;  // +inf before the stack is full rank
  std::vector<int> gate;            // weight update active during the step

  // Filled when config.diagnostics is set and the stack is full.
  std::vector<double> stack_mismatch;  // |Sigma - Sigma_hat|_2, NaN if n/a
  std::vector<double> perturbation;    // |(I - pinv(S_hat) S) W*|, NaN if n/a

  double tt = 0.0;
  double ss = 0.0;
  bool diverged = false;
  double divergence_time = 0.0;
  std::optional<double> first_full_rank_time;
  std::optional<double> first_gate_time;
  int kf_skipped_updates = 0;
  double kf_max_asymmetry = 0.0;
  double kf_min_eigenvalue = std::numeric_limits<double>::infinity();
  Eigen::VectorXd w_final;
  Eigen::VectorXd x_hat_final;
};

/// Recompute TT (mean over the series) and SS (mean over the trailing
/// `window` seconds, i.e. round(window / dt) samples).
double trajectory_average(const std::vector<double>& metric);
double steady_state_average(const std::vector<double>& metric, double window, double dt);

/// Lock-step plant/observer simulation for one seed. Never throws on
/// observer divergence; the result is flagged instead.
TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed);
TrialResult run_trial(const ExperimentConfig& config, const ExperimentSetup& setup,
                      std::uint64_t seed);

struct SummaryRow {
  std::string variant;
  double noise_sd = 0.0;
  double tt_mean = 0.0;
  double tt_sd = 0.0;
  double ss_mean = 0.0;
  double ss_sd = 0.0;
  int diverged = 0;
};

struct MonteCarloOptions {
  /// 0 means: IRL_OBS_THREADS if set, otherwise hardware concurrency.
  unsigned threads = 0;
  /// Called from worker threads, possibly concurrently, once per finished
  /// trial. With no callback the trials keep only their final sample.
  std::function<void(const ExperimentConfig&, const TrialResult&)> on_trial;
};

unsigned resolve_thread_count(unsigned requested);

/// Runs seeds base_seed .. base_seed + trials - 1 for every (variant, noise)
/// pair of the sweep. Diverged trials are counted and excluded from the
/// means; SDs are sample standard deviations (0 for a single trial).
std::vector<SummaryRow> run_monte_carlo(const ExperimentConfig& config, int trials,
                                        std::uint64_t base_seed,
                                        const MonteCarloOptions& options = {});

/// The sweep expanded into concrete single-run configurations.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config);

}  // namespace irlobs
