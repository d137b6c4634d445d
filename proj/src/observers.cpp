#include "irlobs/observers.hpp"

#include <cmath>
#include <sstream>

#include "irlobs/integrator.hpp"
#include "irlobs/linalg.hpp"

namespace irlobs {

namespace {

bool is_spd(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) return false;
  if (max_asymmetry(M) > 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff())) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (M + M.transpose()));
  return llt.info() == Eigen::Success;
}

bool is_psd_symmetric(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) return false;
  if (max_asymmetry(M) > 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12;
}

void check_finite(const ObserverState& s) {
  if (!s.x_hat.allFinite() || !s.w_hat.allFinite()) throw ObserverDiverged(s.t);
  if (s.kf && (!s.kf->P_x.allFinite() || !s.kf->P_w.allFinite()))
    throw ObserverDiverged(s.t);
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// One RK4 step of X' = A X from X = I.
Eigen::MatrixXd rk4_transition(const Eigen::MatrixXd& A, double dt) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  const Eigen::MatrixXd Ah = A * dt;
  const Eigen::MatrixXd Ah2 = Ah * Ah;
  return I + Ah + Ah2 / 2.0 + Ah2 * Ah / 6.0 + Ah2 * Ah2 / 24.0;
}

}  // namespace

std::string to_string(ObserverVariant v) {
  switch (v) {
    case ObserverVariant::kMlo: return "mlo";
    case ObserverVariant::kHso: return "hso";
    case ObserverVariant::kHsoKf: return "hso-kf";
  }
  return "unknown";
}

ObserverVariant parse_variant(const std::string& s) {
  if (s == "mlo") return ObserverVariant::kMlo;
  if (s == "hso") return ObserverVariant::kHso;
  if (s == "hso-kf" || s == "hso_kf") return ObserverVariant::kHsoKf;
  throw std::invalid_argument("unknown observer variant '" + s + "'");
}

K4Schedule K4Schedule::Constant(double k) {
  K4Schedule s;
  s.kind = Kind::kConstant;
  s.k = k;
  return s;
}

K4Schedule K4Schedule::Exponential(double a, double b, double k) {
  K4Schedule s;
  s.kind = Kind::kExponential;
  s.a = a;
  s.b = b;
  s.k = k;
  return s;
}

K4Schedule K4Schedule::Kalman() {
  K4Schedule s;
  s.kind = Kind::kKalman;
  return s;
}

void K4Schedule::validate() const {
  if (kind == Kind::kKalman) return;
  if (!(k > 0.0) || !std::isfinite(k))
    throw std::invalid_argument("schedule violates SPD hypothesis");
  if (kind == Kind::kExponential && (!(a < 1.0) || !(b >= 0.0) || !std::isfinite(a)))
    throw std::invalid_argument("schedule violates SPD hypothesis");
}

double K4Schedule::scalar(double t) const {
  switch (kind) {
    case Kind::kConstant: return k;
    case Kind::kExponential: return (1.0 - a * std::exp(-b * t)) * k;
    case Kind::kKalman: break;
  }
  throw std::logic_error("Kalman schedule has no closed form");
}

double K4Schedule::lower_bound() const {
  if (kind == Kind::kExponential) return std::min(1.0 - a, 1.0) * k;
  return scalar(0.0);
}

double K4Schedule::upper_bound() const {
  if (kind == Kind::kExponential) return std::max(1.0 - a, 1.0) * k;
  return scalar(0.0);
}

Eigen::MatrixXd k4_schedule(double t, const K4Schedule& schedule, int d) {
  schedule.validate();
  return schedule.scalar(t) * Eigen::MatrixXd::Identity(d, d);
}

void GainConfig::validate(const LtiSystem& system, const CostParameterization& param,
                          int stack_capacity) const {
  const int n = system.n();
  const int L = system.L();
  const int d = param.weight_dim();
  if (K1.rows() != n || K1.cols() != L)
    throw std::invalid_argument("gains.K1: expected " + std::to_string(n) + "x" +
                                std::to_string(L));
  if (variant != ObserverVariant::kHsoKf &&
      !is_hurwitz(system.A() - K1 * system.C()))
    throw std::invalid_argument("gains.K1: A - K1 C is not Hurwitz");
  switch (variant) {
    case ObserverVariant::kMlo:
      if (K2.rows() != d || K2.cols() != d)
        throw std::invalid_argument("gains.K2: expected " + std::to_string(d) + "x" +
                                    std::to_string(d));
      if (!is_spd(K2)) throw std::invalid_argument("gains.K2: not symmetric positive definite");
      if (!(nu >= 0.0)) throw std::invalid_argument("gains.nu: must be >= 0");
      break;
    case ObserverVariant::kHso:
      if (k4.kind == K4Schedule::Kind::kKalman)
        throw std::invalid_argument("gains.k4: Kalman schedule needs the hso-kf variant");
      k4.validate();
      break;
    case ObserverVariant::kHsoKf: {
      const int rows = stack_capacity * (1 + param.m);
      auto check = [](const Eigen::MatrixXd& M, int dim, const char* name, bool definite) {
        if (M.rows() != dim || M.cols() != dim)
          throw std::invalid_argument(std::string("gains.") + name + ": expected " +
                                      std::to_string(dim) + "x" + std::to_string(dim));
        if (definite ? !is_spd(M) : !is_psd_symmetric(M))
          throw std::invalid_argument(std::string("gains.") + name +
                                      (definite ? ": not symmetric positive definite"
                                                : ": not symmetric positive semidefinite"));
      };
      check(R_meas_x, L, "R_meas_x", true);
      check(R_meas_w, rows, "R_meas_w", true);
      check(Q_proc_x, n, "Q_proc_x", false);
      check(Q_proc_w, d, "Q_proc_w", false);
      break;
    }
  }
  if (!(gate_max_condition > 0.0))
    throw std::invalid_argument("gains.gate_max_condition: must be > 0");
}

Eigen::VectorXd Measurement::policy_u() const {
  if (u_exc.size() == 0) return u;
  return u - u_exc;
}

ObserverDiverged::ObserverDiverged(double t)
    : std::runtime_error([t] {
        std::ostringstream os;
        os << "observer diverged at t=" << t;
        return os.str();
      }()),
      t_(t) {}

Eigen::VectorXd state_observer_derivative(const Eigen::VectorXd& x_hat,
                                          const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& u,
                                          const Eigen::MatrixXd& K1,
                                          const LtiSystem& system) {
  return system.A() * x_hat + system.B() * u + K1 * (y - system.C() * x_hat);
}

Eigen::VectorXd mlo_weight_derivative(const Eigen::VectorXd& w, const Eigen::MatrixXd& g,
                                      const Eigen::VectorXd& sigma_u,
                                      const Eigen::MatrixXd& K2, double nu) {
  const Eigen::MatrixXd gtg = g.transpose() * g;
  const double gamma = 1.0 / (nu * spectral_norm(gtg) + 1.0);
  return gamma * (K2 * (g.transpose() * (sigma_u - g * w)));
}

Eigen::VectorXd mlo_weight_hold_update(const Eigen::VectorXd& w, const Eigen::MatrixXd& g,
                                       const Eigen::VectorXd& sigma_u,
                                       const Eigen::MatrixXd& K2, double nu, double dt) {
  // W' = K2 (b - G W) with G = gamma g'g, b = gamma g' sigma_u. Substituting
  // W = L Z (K2 = L L') gives the symmetric system Z' = L'b - L'G L Z.
  const Eigen::MatrixXd gtg = g.transpose() * g;
  const double gamma = 1.0 / (nu * spectral_norm(gtg) + 1.0);
  const Eigen::LLT<Eigen::MatrixXd> llt(K2);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("gains.K2: not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd H = gamma * (L.transpose() * gtg * L);
  const Eigen::VectorXd c = gamma * (L.transpose() * (g.transpose() * sigma_u));
  const Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(w);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(H));
  const Eigen::MatrixXd& V = es.eigenvectors();
  const Eigen::VectorXd zc = V.transpose() * z;
  const Eigen::VectorXd cc = V.transpose() * c;
  Eigen::VectorXd out(zc.size());
  for (Eigen::Index i = 0; i < zc.size(); ++i) {
    const double lam = std::max(es.eigenvalues()(i), 0.0);
    const double decay = std::exp(-lam * dt);
    const double phi = lam > 0.0 ? -std::expm1(-lam * dt) / lam : dt;
    out(i) = decay * zc(i) + phi * cc(i);
  }
  return L * (V * out);
}

ObserverState mlo_step(const ObserverState& state, const Measurement& meas, double dt,
                       const GainConfig& gains, const IrlModel& model) {
  const LtiSystem& sys = model.system;
  const Eigen::VectorXd up = meas.policy_u();
  const Eigen::VectorXd su = sigma_u_vec(up(0), model.r1, model.param.m);
  const int n = sys.n();
  ObserverState next = state;
  next.t = state.t + dt;

  if (gains.mlo_scheme == MloScheme::kRk4) {
    const int d = model.param.weight_dim();
    VectorField f = [&](double, const Eigen::VectorXd& z) {
      Eigen::VectorXd dz(n + d);
      const Eigen::VectorXd xh = z.head(n);
      dz.head(n) = state_observer_derivative(xh, meas.y, meas.u, gains.K1, sys);
      const Eigen::MatrixXd g = g_matrix(xh, up, sys, model.param);
      dz.tail(d) = mlo_weight_derivative(z.tail(d), g, su, gains.K2, gains.nu);
      return dz;
    };
    Eigen::VectorXd z(n + d);
    z << state.x_hat, state.w_hat;
    try {
      z = integrate_step(f, state.t, z, dt);
    } catch (const IntegrationDiverged& e) {
      throw ObserverDiverged(e.time());
    }
    next.x_hat = z.head(n);
    next.w_hat = z.tail(d);
  } else {
    const Eigen::MatrixXd g = g_matrix(state.x_hat, up, sys, model.param);
    next.w_hat = mlo_weight_hold_update(state.w_hat, g, su, gains.K2, gains.nu, dt);
    VectorField f = [&](double, const Eigen::VectorXd& xh) {
      return state_observer_derivative(xh, meas.y, meas.u, gains.K1, sys);
    };
    try {
      next.x_hat = integrate_step(f, state.t, state.x_hat, dt);
    } catch (const IntegrationDiverged& e) {
      throw ObserverDiverged(e.time());
    }
  }
  check_finite(next);
  return next;
}

StackInnovation prepare_innovation(const HistoryStack& stack, const GainConfig& gains) {
  StackInnovation inn;
  inn.version = stack.version();
  if (!stack.full()) return inn;
  const AssembledStack a = stack.assemble();
  inn.sigma_hat = a.sigma_hat;
  inn.sigma_u = a.sigma_u;
  inn.full_rank = stack.is_full_rank();
  inn.condition = stack.condition_number();
  inn.gate_open = inn.full_rank && inn.condition <= gains.gate_max_condition;
  inn.pinv = pseudo_inverse(inn.sigma_hat);
  return inn;
}

Eigen::VectorXd hso_weight_derivative(double t, const Eigen::VectorXd& w,
                                      const StackInnovation& inn, const GainConfig& gains) {
  return gains.k4.scalar(t) * (inn.pinv * (inn.sigma_u - inn.sigma_hat * w));
}

Eigen::VectorXd hso_weight_update(double t, const Eigen::VectorXd& w,
                                  const StackInnovation& inn, const GainConfig& gains,
                                  double dt) {
  if (!gains.gate_enabled) {
    if (!inn.full_rank) throw std::runtime_error("stack not full rank");
  } else if (!inn.gate_open) {
    return w;
  }
  VectorField f = [&](double tt, const Eigen::VectorXd& ww) {
    return hso_weight_derivative(tt, ww, inn, gains);
  };
  try {
    return integrate_step(f, t, w, dt);
  } catch (const IntegrationDiverged& e) {
    throw ObserverDiverged(e.time());
  }
}

ObserverState hso_step(const ObserverState& state, const Measurement& meas,
                       const HistoryStack& stack, double dt, const GainConfig& gains,
                       const IrlModel& model) {
  const StackInnovation inn = prepare_innovation(stack, gains);
  ObserverState next = state;
  next.t = state.t + dt;
  next.w_hat = hso_weight_update(state.t, state.w_hat, inn, gains, dt);
  VectorField f = [&](double, const Eigen::VectorXd& xh) {
    return state_observer_derivative(xh, meas.y, meas.u, gains.K1, model.system);
  };
  try {
    next.x_hat = integrate_step(f, state.t, state.x_hat, dt);
  } catch (const IntegrationDiverged& e) {
    throw ObserverDiverged(e.time());
  }
  check_finite(next);
  return next;
}

KfCovariances initial_covariances(int n, int d, double px, double pw) {
  return {px * Eigen::MatrixXd::Identity(n, n), pw * Eigen::MatrixXd::Identity(d, d)};
}

KfStepResult hso_kf_step(const ObserverState& state, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& y_next, const StackInnovation& inn,
                         double dt, const GainConfig& gains, const IrlModel& model) {
  if (!state.kf) throw std::logic_error("KF covariances not initialized");
  const LtiSystem& sys = model.system;
  const int n = sys.n();
  const int d = model.param.weight_dim();
  KfStepResult res;
  res.state = state;
  res.state.t = state.t + dt;
  KfCovariances& cov = *res.state.kf;

  // State block: model prediction, then correction with the new output.
  VectorField f = [&](double, const Eigen::VectorXd& xh) {
    return Eigen::VectorXd(sys.A() * xh + sys.B() * u);
  };
  Eigen::VectorXd x_pred;
  try {
    x_pred = integrate_step(f, state.t, state.x_hat, dt);
  } catch (const IntegrationDiverged& e) {
    throw ObserverDiverged(e.time());
  }
  // Covariance prediction through the RK4 transition matrix of A. It agrees
  // with P + (AP + PA' + Q) dt to first order but stays positive semidefinite
  // when a near noise-free update has collapsed P along the measured
  // directions.
  const Eigen::MatrixXd Phi = rk4_transition(sys.A(), dt);
  Eigen::MatrixXd P = symmetrize(Phi * cov.P_x * Phi.transpose() + gains.Q_proc_x * dt);
  const Eigen::MatrixXd& C = sys.C();
  const Eigen::MatrixXd Sx = symmetrize(C * P * C.transpose() + gains.R_meas_x);
  Eigen::LDLT<Eigen::MatrixXd> sx_ldlt(Sx);
  res.K3 = Eigen::MatrixXd::Zero(n, sys.L());
  if (sx_ldlt.info() == Eigen::Success && sx_ldlt.isPositive() &&
      sx_ldlt.rcond() > 1e-15) {
    res.K3 = sx_ldlt.solve(C * P).transpose();
    const Eigen::MatrixXd IKC = Eigen::MatrixXd::Identity(n, n) - res.K3 * C;
    res.state.x_hat = x_pred + res.K3 * (y_next - C * x_pred);
    P = IKC * P * IKC.transpose() + res.K3 * gains.R_meas_x * res.K3.transpose();
  } else {
    res.state.x_hat = x_pred;
    res.state_update_skipped = true;
  }
  cov.P_x = symmetrize(P);

  // Weight block: random walk measured through the stack.
  Eigen::MatrixXd Pw = symmetrize(cov.P_w + gains.Q_proc_w * dt);
  const int rows = static_cast<int>(inn.sigma_hat.rows());
  res.K_w = Eigen::MatrixXd::Zero(d, std::max(rows, 0));
  const bool open = gains.gate_enabled ? inn.gate_open : inn.full_rank;
  if (!gains.gate_enabled && !inn.full_rank) throw std::runtime_error("stack not full rank");
  if (open) {
    // Information form: the stack has more rows than weights, so H P H' + R
    // is dominated by a rank-d term and is far worse conditioned than the
    // d x d information matrix P^-1 + H' R^-1 H.
    const Eigen::MatrixXd& H = inn.sigma_hat;
    Eigen::LDLT<Eigen::MatrixXd> r_ldlt(gains.R_meas_w);
    Eigen::LLT<Eigen::MatrixXd> p_llt(Pw);
    if (r_ldlt.info() == Eigen::Success && r_ldlt.isPositive() &&
        p_llt.info() == Eigen::Success) {
      const Eigen::MatrixXd RinvH = r_ldlt.solve(H);
      const Eigen::MatrixXd info = symmetrize(
          p_llt.solve(Eigen::MatrixXd::Identity(d, d)) + H.transpose() * RinvH);
      Eigen::LLT<Eigen::MatrixXd> info_llt(info);
      if (info_llt.info() == Eigen::Success) {
        Pw = symmetrize(info_llt.solve(Eigen::MatrixXd::Identity(d, d)));
        res.K_w = Pw * RinvH.transpose();
        res.state.w_hat = state.w_hat + res.K_w * (inn.sigma_u - H * state.w_hat);
      } else {
        res.weight_update_skipped = true;
      }
    } else {
      res.weight_update_skipped = true;
    }
  }
  cov.P_w = symmetrize(Pw);
  check_finite(res.state);
  return res;
}

PeMonitor::PeMonitor(double window, double dt)
    : capacity_(static_cast<std::size_t>(std::max(1.0, std::round(window / dt)))), dt_(dt) {
  if (!(window > 0.0) || !(dt > 0.0)) throw std::invalid_argument("PE window and dt must be > 0");
}

void PeMonitor::push(const Eigen::MatrixXd& g) {
  terms_.push_back(g.transpose() * g);
  if (terms_.size() > capacity_) terms_.pop_front();
}

double PeMonitor::min_eigenvalue() const {
  if (terms_.empty()) return 0.0;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(terms_.front().rows(), terms_.front().cols());
  for (const auto& t : terms_) sum += t;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sum * dt_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool PeMonitor::window_filled() const { return terms_.size() == capacity_; }

}  // namespace irlobs
