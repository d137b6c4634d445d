#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace irlobs {

using VectorField =
    std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& state)>;

/// Raised when an integrated trajectory leaves the finite range.
class IntegrationDiverged : public std::runtime_error {
 public:
  explicit IntegrationDiverged(double t)
      : std::runtime_error("integration diverged at t=" + std::to_string(t)),
        time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// One classical fourth-order Runge-Kutta step of size dt from (t, state).
Eigen::VectorXd integrate_step(const VectorField& derivative, double t,
                               const Eigen::VectorXd& state, double dt);

/// `substeps` consecutive RK4 steps of size dt / substeps.
Eigen::VectorXd integrate_substeps(const VectorField& derivative, double t,
                                   const Eigen::VectorXd& state, double dt,
                                   int substeps);

}  // namespace irlobs
