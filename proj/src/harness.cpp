#include "irlobs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "irlobs/history_stack.hpp"
#include "irlobs/integrator.hpp"
#include "irlobs/linalg.hpp"

namespace irlobs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw std::invalid_argument("config field '" + field + "': " + what);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t trial_seed, std::uint64_t base, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(trial_seed & 0xffffffffULL),
                    static_cast<std::uint32_t>(trial_seed >> 32), stream,
                    static_cast<std::uint32_t>(base & 0xffffffffULL),
                    static_cast<std::uint32_t>(base >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, int size, double sd) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  if (sd == 0.0) return v;
  std::normal_distribution<double> dist(0.0, sd);
  for (int i = 0; i < size; ++i) v(i) = dist(rng);
  return v;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto n = A.rows();
  if (n < 1 || A.cols() != n) field_error("A", "must be a non-empty square matrix");
  if (B.rows() != n || B.cols() < 1) field_error("B", "must have as many rows as A");
  if (C.cols() != n || C.rows() < 1) field_error("C", "must have as many columns as A");
  if (Q.rows() != n || Q.cols() != n) field_error("Q", "must be n x n");
  const auto m = B.cols();
  if (R.rows() != m || R.cols() != m) field_error("R", "must be m x m");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !Q.allFinite() || !R.allFinite())
    field_error("system", "non-finite matrix entry");
  if (excitation.channels != 0 && excitation.channels != m)
    field_error("excitation", "channel count must match the number of inputs");
  try {
    excitation.validate();
  } catch (const std::invalid_argument& e) {
    field_error("excitation", e.what());
  }
  if (!K1 && observer_poles.empty() && variant != ObserverVariant::kHsoKf)
    field_error("observer_poles", "required unless K1 is given");
  if (!K1 && !observer_poles.empty() && static_cast<Eigen::Index>(observer_poles.size()) != n)
    field_error("observer_poles", "need exactly n poles");
  if (K1 && (K1->rows() != n || K1->cols() != C.rows())) field_error("K1", "must be n x L");
  if (!(k2 > 0.0)) field_error("k2", "must be > 0");
  if (!(nu >= 0.0)) field_error("nu", "must be >= 0");
  if (!(gate_max_condition > 0.0)) field_error("gate_max_condition", "must be > 0");
  if (!(dt > 0.0)) field_error("dt", "must be > 0");
  if (!(horizon >= dt)) field_error("horizon", "must be >= dt");
  if (!(noise_sd_y >= 0.0)) field_error("noise_sd_y", "must be >= 0");
  if (!(noise_sd_u >= 0.0)) field_error("noise_sd_u", "must be >= 0");
  for (double s : noise_levels)
    if (!(s >= 0.0)) field_error("noise_levels", "must be >= 0");
  if (!(ss_window > 0.0)) field_error("ss_window", "must be > 0");
  if (trials < 1) field_error("trials", "must be >= 1");
  if (stack_capacity < 1) field_error("stack_capacity", "must be >= 1");
  if (!(purge_interval > 0.0)) field_error("purge_interval", "must be > 0");
  if (buffer_size < stack_capacity) field_error("buffer_size", "must be >= stack_capacity");
  if (record_every < 1) field_error("record_every", "must be >= 1");
  if (x0.size() != 0 && x0.size() != n) field_error("x0", "must have n entries");
  if (x_hat0.size() != 0 && x_hat0.size() != n) field_error("x_hat0", "must have n entries");
  const CostParameterization p(parameterization, static_cast<int>(n), static_cast<int>(m));
  if (w_hat0.size() != 0 && w_hat0.size() != p.weight_dim())
    field_error("w_hat0", "must have " + std::to_string(p.weight_dim()) + " entries");
  if (kalman.R_meas_x && (kalman.R_meas_x->rows() != C.rows() ||
                          kalman.R_meas_x->cols() != C.rows()))
    field_error("kalman.R_meas_x", "must be L x L");
  const auto rows = static_cast<Eigen::Index>(stack_capacity) * (1 + m);
  if (kalman.R_meas_w && (kalman.R_meas_w->rows() != rows || kalman.R_meas_w->cols() != rows))
    field_error("kalman.R_meas_w", "must be N(1+m) square");
  if (!(kalman.q_proc_x >= 0.0)) field_error("kalman.q_proc_x", "must be >= 0");
  if (!(kalman.q_proc_w >= 0.0)) field_error("kalman.q_proc_w", "must be >= 0");
  if (!(kalman.r_floor > 0.0)) field_error("kalman.r_floor", "must be > 0");
  if (!(kalman.p_x0 > 0.0)) field_error("kalman.p_x0", "must be > 0");
  if (!(kalman.p_w0 > 0.0)) field_error("kalman.p_w0", "must be > 0");
}

LtiSystem ExperimentConfig::system() const { return LtiSystem(A, B, C); }

QuadraticCost ExperimentConfig::cost() const { return QuadraticCost(Q, R); }

CostParameterization ExperimentConfig::param() const {
  return CostParameterization(parameterization, static_cast<int>(A.rows()),
                              static_cast<int>(B.cols()));
}

ExperimentSetup prepare_experiment(const ExperimentConfig& config) {
  config.validate();
  const LtiSystem system = config.system();
  const CostParameterization param = config.param();
  QuadraticCost cost = with_care_solution(system, config.cost());
  ExperimentSetup setup{IrlModel{system, param, cost.R()(0, 0)}, cost,
                        lqr_gain(system, cost), pack_weights(cost, param), GainConfig{}};

  GainConfig& g = setup.gains;
  g.variant = config.variant;
  if (config.K1) {
    g.K1 = *config.K1;
  } else if (!config.observer_poles.empty()) {
    g.K1 = place_observer_gain(system, config.observer_poles);
  } else {
    g.K1 = Eigen::MatrixXd::Zero(system.n(), system.L());
  }
  const int d = param.weight_dim();
  g.K2 = config.k2 * Eigen::MatrixXd::Identity(d, d);
  g.nu = config.nu;
  g.mlo_scheme = config.mlo_scheme;
  g.k4 = config.variant == ObserverVariant::kHsoKf ? K4Schedule::Kalman() : config.k4;
  g.gate_max_condition = config.gate_max_condition;

  const KalmanSettings& ks = config.kalman;
  const int rows = config.stack_capacity * (1 + system.m());
  g.R_meas_x = ks.R_meas_x ? *ks.R_meas_x
                           : Eigen::MatrixXd(std::max(config.noise_sd_y * config.noise_sd_y,
                                                      ks.r_floor) *
                                             Eigen::MatrixXd::Identity(system.L(), system.L()));
  g.R_meas_w = ks.R_meas_w
                   ? *ks.R_meas_w
                   : Eigen::MatrixXd(
                         std::max(config.noise_sd_u * config.noise_sd_u * ks.r_w_scale,
                                  ks.r_floor) *
                         Eigen::MatrixXd::Identity(rows, rows));
  g.Q_proc_x = ks.q_proc_x * Eigen::MatrixXd::Identity(system.n(), system.n());
  g.Q_proc_w = ks.q_proc_w * Eigen::MatrixXd::Identity(d, d);
  g.validate(system, param, config.stack_capacity);
  return setup;
}

Eigen::VectorXd weight_error_components(const Eigen::VectorXd& w_hat,
                                        const WeightVector& w_star) {
  const Eigen::VectorXd ws = w_star.stacked();
  if (ws.size() != w_hat.size()) throw std::invalid_argument("dimension error");
  Eigen::VectorXd out(ws.size());
  for (Eigen::Index i = 0; i < ws.size(); ++i) {
    const double err = std::abs(w_hat(i) - ws(i));
    out(i) = ws(i) != 0.0 ? err / std::abs(ws(i)) : err;
  }
  return out;
}

double weight_error_metric(const Eigen::VectorXd& w_hat, const WeightVector& w_star) {
  const Eigen::VectorXd ws = w_star.stacked();
  if (ws.size() != w_hat.size()) throw std::invalid_argument("dimension error");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ws.size(); ++i)
    if (ws(i) != 0.0) sum += std::abs(w_hat(i) - ws(i)) / std::abs(ws(i));
  return sum;
}

double weight_error_metric(const WeightVector& w_hat, const WeightVector& w_star,
                           const CostParameterization& param) {
  const Eigen::VectorXd wh = w_hat.stacked();
  if (wh.size() != param.weight_dim()) throw std::invalid_argument("dimension error");
  return weight_error_metric(wh, w_star);
}

double trajectory_average(const std::vector<double>& metric) { return mean(metric); }

double steady_state_average(const std::vector<double>& metric, double window, double dt) {
  const auto count = static_cast<std::size_t>(std::llround(window / dt));
  const std::size_t take = std::min(std::max<std::size_t>(count, 1), metric.size());
  if (take == 0) return kNaN;
  double s = 0.0;
  for (std::size_t i = metric.size() - take; i < metric.size(); ++i) s += metric[i];
  return s / static_cast<double>(take);
}

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed) {
  return run_trial(config, prepare_experiment(config), seed);
}

TrialResult run_trial(const ExperimentConfig& config, const ExperimentSetup& setup,
                      std::uint64_t seed) {
  const LtiSystem& sys = setup.model.system;
  const CostParameterization& param = setup.model.param;
  const GainConfig& gains = setup.gains;
  const int n = sys.n();
  const int m = sys.m();
  const int L = sys.L();
  const int d = param.weight_dim();
  const double dt = config.dt;
  const auto steps = static_cast<long>(std::llround(config.horizon / dt));
  const bool uses_stack = config.variant != ObserverVariant::kMlo;
  const bool kalman = config.variant == ObserverVariant::kHsoKf;

  TrialResult res;
  res.seed = seed;
  res.variant = config.variant;
  res.noise_sd_y = config.noise_sd_y;
  res.noise_sd_u = config.noise_sd_u;

  ExcitationSpec exc = config.excitation;
  if (exc.channels == 0) exc.channels = m;
  if (exc.random) exc.random->seed = derive_seed(seed, exc.random->seed, 3);
  std::mt19937_64 y_rng = make_stream(seed, 1);
  std::mt19937_64 u_rng = make_stream(seed, 2);

  Eigen::VectorXd x = config.x0.size() ? config.x0 : Eigen::VectorXd::Ones(n);
  ObserverState obs;
  obs.x_hat = config.x_hat0.size() ? config.x_hat0 : Eigen::VectorXd::Zero(n);
  obs.w_hat = config.w_hat0.size() ? config.w_hat0 : Eigen::VectorXd::Zero(d);
  if (kalman) obs.kf = initial_covariances(n, d, config.kalman.p_x0, config.kalman.p_w0);

  HistoryStackOptions sopt;
  sopt.capacity = config.stack_capacity;
  sopt.purge_interval = config.purge_interval;
  sopt.buffer_size = config.buffer_size;
  std::optional<HistoryStack> stack;
  if (uses_stack) stack.emplace(sys, param, setup.model.r1, sopt);
  StackInnovation inn;
  inn.version = std::numeric_limits<std::uint64_t>::max();

  const Eigen::VectorXd w_star = setup.w_star.stacked();
  const double r1 = setup.model.r1;
  std::vector<double> metric_all;
  metric_all.reserve(static_cast<std::size_t>(steps));
  Eigen::VectorXd eta_y = gaussian(y_rng, L, config.noise_sd_y);

  auto record = [&](double t, bool gate_open) {
    res.t.push_back(t);
    res.metric.push_back(metric_all.back());
    res.wtilde.push_back(weight_error_components(obs.w_hat, setup.w_star));
    res.xtilde.push_back(x - obs.x_hat);
    res.wtilde_norm.push_back((obs.w_hat - w_star).norm());
    res.cond_number.push_back(stack ? stack->condition_number() : kNaN);
    res.gate.push_back(gate_open ? 1 : 0);
    if (config.diagnostics && stack && stack->full()) {
      const Eigen::MatrixXd sigma = stack->true_sigma();
      res.stack_mismatch.push_back(spectral_norm(sigma - inn.sigma_hat));
      res.perturbation.push_back(
          (w_star - inn.pinv * (sigma * w_star)).norm());
    } else if (config.diagnostics) {
      res.stack_mismatch.push_back(kNaN);
      res.perturbation.push_back(kNaN);
    }
  };

  try {
    for (long k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const Eigen::VectorXd u_exc = excitation_vector(exc, t);
      const Eigen::VectorXd u = -setup.K_star * x + u_exc;
      const Eigen::VectorXd y = sys.C() * x + eta_y;
      const Eigen::VectorXd u_meas = u + gaussian(u_rng, m, config.noise_sd_u);
      const Eigen::VectorXd u_pol = u_meas - u_exc;

      bool gate_open = false;
      if (stack) {
        std::optional<Eigen::VectorXd> truth;
        if (config.diagnostics) truth = x;
        stack->offer_sample(obs.x_hat, u_pol, t, truth);
        stack->purge_and_refresh(t);
        if (stack->version() != inn.version) {
          inn = prepare_innovation(*stack, gains);
          if (inn.full_rank && !res.first_full_rank_time) res.first_full_rank_time = t;
        }
        gate_open = inn.gate_open;
        if (gate_open && !res.first_gate_time) res.first_gate_time = t;
      }

      if (kalman) {
        const Eigen::VectorXd x_next = integrate_step(
            [&](double, const Eigen::VectorXd& xx) {
              return Eigen::VectorXd(sys.A() * xx + sys.B() * u);
            },
            t, x, dt);
        eta_y = gaussian(y_rng, L, config.noise_sd_y);
        const Eigen::VectorXd y_next = sys.C() * x_next + eta_y;
        KfStepResult kf = hso_kf_step(obs, u_meas, y_next, inn, dt, gains, setup.model);
        if (kf.state_update_skipped || kf.weight_update_skipped) ++res.kf_skipped_updates;
        obs = std::move(kf.state);
        x = x_next;
        if (config.diagnostics) {
          for (const Eigen::MatrixXd* P : {&obs.kf->P_x, &obs.kf->P_w}) {
            res.kf_max_asymmetry = std::max(res.kf_max_asymmetry, max_asymmetry(*P));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*P, Eigen::EigenvaluesOnly);
            res.kf_min_eigenvalue = std::min(res.kf_min_eigenvalue, es.eigenvalues()(0));
          }
        }
      } else {
        const bool joint_weights =
            config.variant == ObserverVariant::kMlo && gains.mlo_scheme == MloScheme::kRk4;
        const Eigen::VectorXd su = sigma_u_vec(u_pol(0), r1, m);
        Eigen::VectorXd w_next;
        if (config.variant == ObserverVariant::kMlo && !joint_weights) {
          const Eigen::MatrixXd g = g_matrix(obs.x_hat, u_pol, sys, param);
          w_next = mlo_weight_hold_update(obs.w_hat, g, su, gains.K2, gains.nu, dt);
        } else if (config.variant == ObserverVariant::kHso) {
          w_next = hso_weight_update(t, obs.w_hat, inn, gains, dt);
        }
        // Plant and state observer advance together so the observer sees
        // the output at every stage; noise and input are held over the step.
        const int extra = joint_weights ? d : 0;
        VectorField f = [&](double, const Eigen::VectorXd& z) {
          Eigen::VectorXd dz(2 * n + extra);
          const auto xs = z.head(n);
          const Eigen::VectorXd xh = z.segment(n, n);
          dz.head(n) = sys.A() * xs + sys.B() * u;
          const Eigen::VectorXd ys = sys.C() * xs + eta_y;
          dz.segment(n, n) = state_observer_derivative(xh, ys, u_meas, gains.K1, sys);
          if (joint_weights) {
            const Eigen::MatrixXd g = g_matrix(xh, u_pol, sys, param);
            dz.tail(d) = mlo_weight_derivative(z.tail(d), g, su, gains.K2, gains.nu);
          }
          return dz;
        };
        Eigen::VectorXd z(2 * n + extra);
        if (joint_weights) {
          z << x, obs.x_hat, obs.w_hat;
        } else {
          z << x, obs.x_hat;
        }
        z = integrate_step(f, t, z, dt);
        x = z.head(n);
        obs.x_hat = z.segment(n, n);
        obs.w_hat = joint_weights ? Eigen::VectorXd(z.tail(d)) : w_next;
        obs.t = t + dt;
        eta_y = gaussian(y_rng, L, config.noise_sd_y);
        if (config.variant == ObserverVariant::kMlo) gate_open = true;
      }
      if (!x.allFinite() || !obs.x_hat.allFinite() || !obs.w_hat.allFinite() ||
          obs.w_hat.norm() > 1e15)
        throw ObserverDiverged(t + dt);

      metric_all.push_back(weight_error_metric(obs.w_hat, setup.w_star));
      if ((k + 1) % config.record_every == 0 || k + 1 == steps) record(t + dt, gate_open);
    }
  } catch (const ObserverDiverged& e) {
    res.diverged = true;
    res.divergence_time = e.time();
  } catch (const IntegrationDiverged& e) {
    res.diverged = true;
    res.divergence_time = e.time();
  }

  if (res.diverged) {
    res.tt = kNaN;
    res.ss = kNaN;
  } else {
    res.tt = trajectory_average(metric_all);
    res.ss = steady_state_average(metric_all, config.ss_window, dt);
  }
  res.w_final = obs.w_hat;
  res.x_hat_final = obs.x_hat;
  return res;
}

unsigned resolve_thread_count(unsigned requested) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned n = requested ? requested : hw;
  if (const char* env = std::getenv("IRL_OBS_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config) {
  std::vector<ObserverVariant> variants = config.variants;
  if (variants.empty()) variants.push_back(config.variant);
  std::vector<ExperimentConfig> out;
  for (ObserverVariant v : variants) {
    if (config.noise_levels.empty()) {
      ExperimentConfig c = config;
      c.variant = v;
      out.push_back(std::move(c));
      continue;
    }
    for (double sd : config.noise_levels) {
      ExperimentConfig c = config;
      c.variant = v;
      c.noise_sd_y = sd;
      c.noise_sd_u = sd;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<SummaryRow> run_monte_carlo(const ExperimentConfig& config, int trials,
                                        std::uint64_t base_seed,
                                        const MonteCarloOptions& options) {
  if (trials < 1) throw std::invalid_argument("config field 'trials': must be >= 1");
  std::vector<ExperimentConfig> combos = expand_sweep(config);
  std::vector<ExperimentSetup> setups;
  for (auto& c : combos) {
    if (!options.on_trial) c.record_every = INT_MAX;  // keep only the final sample
    setups.push_back(prepare_experiment(c));
  }

  struct Outcome {
    double tt = kNaN;
    double ss = kNaN;
    bool diverged = false;
  };
  const std::size_t per = static_cast<std::size_t>(trials);
  const std::size_t jobs = combos.size() * per;
  std::vector<Outcome> outcomes(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        const std::size_t c = j / per;
        const std::uint64_t seed = base_seed + (j % per);
        TrialResult r = run_trial(combos[c], setups[c], seed);
        outcomes[j] = {r.tt, r.ss, r.diverged};
        if (options.on_trial) options.on_trial(combos[c], r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(jobs);
      }
    }
  };
  const unsigned threads =
      std::min<unsigned>(resolve_thread_count(options.threads), static_cast<unsigned>(jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Seed-ordered reduction, independent of scheduling.
  std::vector<SummaryRow> rows;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    std::vector<double> tt, ss;
    SummaryRow row;
    row.variant = to_string(combos[c].variant);
    row.noise_sd = combos[c].noise_sd_y;
    for (std::size_t i = 0; i < per; ++i) {
      const Outcome& o = outcomes[c * per + i];
      if (o.diverged) {
        ++row.diverged;
        continue;
      }
      tt.push_back(o.tt);
      ss.push_back(o.ss);
    }
    row.tt_mean = mean(tt);
    row.tt_sd = sample_sd(tt);
    row.ss_mean = mean(ss);
    row.ss_sd = sample_sd(ss);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace irlobs
