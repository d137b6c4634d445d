#include "irlobs/integrator.hpp"

namespace irlobs {

namespace {

Eigen::VectorXd checked(const VectorField& f, double t, const Eigen::VectorXd& x) {
  Eigen::VectorXd dx = f(t, x);
  if (dx.size() != x.size())
    throw std::invalid_argument("derivative has wrong dimension");
  if (!dx.allFinite()) throw IntegrationDiverged(t);
  return dx;
}

}  // namespace

Eigen::VectorXd integrate_step(const VectorField& derivative, double t,
                               const Eigen::VectorXd& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be > 0");
  const double half = 0.5 * dt;
  const Eigen::VectorXd k1 = checked(derivative, t, state);
  const Eigen::VectorXd k2 = checked(derivative, t + half, state + half * k1);
  const Eigen::VectorXd k3 = checked(derivative, t + half, state + half * k2);
  const Eigen::VectorXd k4 = checked(derivative, t + dt, state + dt * k3);
  Eigen::VectorXd next = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw IntegrationDiverged(t + dt);
  return next;
}

Eigen::VectorXd integrate_substeps(const VectorField& derivative, double t,
                                   const Eigen::VectorXd& state, double dt,
                                   int substeps) {
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  const double h = dt / substeps;
  Eigen::VectorXd x = state;
  for (int k = 0; k < substeps; ++k) x = integrate_step(derivative, t + k * h, x, h);
  return x;
}

}  // namespace irlobs
