#include "irlobs/features.hpp"

#include <cmath>
#include <stdexcept>

namespace irlobs {

namespace {

void check_size(Eigen::Index got, int want) {
  if (got != want) throw std::invalid_argument("dimension error");
}

Eigen::VectorXd pack_upper(const Eigen::MatrixXd& M) {
  const int k = static_cast<int>(M.rows());
  Eigen::VectorXd out(k * (k + 1) / 2);
  int idx = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) out(idx++) = M(i, j);
  return out;
}

Eigen::MatrixXd unpack_upper(const Eigen::VectorXd& v, int k) {
  Eigen::MatrixXd M(k, k);
  int idx = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      M(i, j) = v(idx);
      M(j, i) = v(idx);
      ++idx;
    }
  return M;
}

Eigen::VectorXd pack_q(const Eigen::MatrixXd& Q, const CostParameterization& param) {
  if (param.kind == QParameterization::kFullSymmetric) return pack_upper(Q);
  for (int i = 0; i < param.n; ++i)
    for (int j = 0; j < param.n; ++j)
      if (i != j && std::abs(Q(i, j)) > 1e-12)
        throw std::invalid_argument("Q not diagonal");
  return Q.diagonal();
}

}  // namespace

CostParameterization::CostParameterization(QParameterization kind_, int n_, int m_)
    : kind(kind_), n(n_), m(m_) {
  if (n < 1 || m < 1) throw std::invalid_argument("parameterization needs n, m >= 1");
}

int pair_index(int i, int j, int dim) {
  if (i > j) std::swap(i, j);
  return i * dim - i * (i - 1) / 2 + (j - i);
}

Eigen::VectorXd WeightVector::stacked() const {
  Eigen::VectorXd out(w_v.size() + w_q.size() + w_r_minus.size());
  out << w_v, w_q, w_r_minus;
  return out;
}

WeightVector WeightVector::FromStacked(const Eigen::VectorXd& w, double r1,
                                       const CostParameterization& param) {
  check_size(w.size(), param.weight_dim());
  if (!(r1 > 0.0)) throw std::invalid_argument("known weight r1 must be > 0");
  WeightVector out;
  out.w_v = w.head(param.p_v());
  out.w_q = w.segment(param.p_v(), param.p_q());
  out.w_r_minus = w.tail(param.M() - 1);
  out.r1 = r1;
  return out;
}

Eigen::VectorXd sigma_v(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd out(n * (n + 1) / 2);
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    out(idx++) = x(i) * x(i);
    for (int j = i + 1; j < n; ++j) out(idx++) = 2.0 * x(i) * x(j);
  }
  return out;
}

Eigen::MatrixXd grad_sigma_v(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * (n + 1) / 2, n);
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    out(idx++, i) = 2.0 * x(i);
    for (int j = i + 1; j < n; ++j) {
      out(idx, i) = 2.0 * x(j);
      out(idx, j) = 2.0 * x(i);
      ++idx;
    }
  }
  return out;
}

Eigen::VectorXd sigma_q(const Eigen::VectorXd& x, const CostParameterization& param) {
  check_size(x.size(), param.n);
  if (param.kind == QParameterization::kFullSymmetric) return sigma_v(x);
  return x.array().square().matrix();
}

Eigen::VectorXd sigma_r1(const Eigen::VectorXd& u) { return sigma_v(u); }

Eigen::MatrixXd sigma_r2(const Eigen::VectorXd& u) {
  const int m = static_cast<int>(u.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m * (m + 1) / 2);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l) out(i, pair_index(i, l, m)) = u(l);
  return out;
}

WeightVector pack_weights(const QuadraticCost& cost, const Eigen::MatrixXd& S,
                          const CostParameterization& param) {
  check_size(S.rows(), param.n);
  check_size(S.cols(), param.n);
  check_size(cost.Q().rows(), param.n);
  check_size(cost.R().rows(), param.m);
  WeightVector w;
  w.w_v = pack_upper(S);
  w.w_q = pack_q(cost.Q(), param);
  const Eigen::VectorXd r = pack_upper(cost.R());
  w.r1 = r(0);
  w.w_r_minus = r.tail(r.size() - 1);
  return w;
}

WeightVector pack_weights(const QuadraticCost& cost,
                          const CostParameterization& param) {
  if (!cost.S()) throw std::logic_error("call solve_care first");
  return pack_weights(cost, *cost.S(), param);
}

CostMatrices unpack_weights(const WeightVector& w, const CostParameterization& param) {
  check_size(w.w_v.size(), param.p_v());
  check_size(w.w_q.size(), param.p_q());
  check_size(w.w_r_minus.size(), param.M() - 1);
  CostMatrices out;
  out.S = unpack_upper(w.w_v, param.n);
  if (param.kind == QParameterization::kFullSymmetric) {
    out.Q = unpack_upper(w.w_q, param.n);
  } else {
    out.Q = w.w_q.asDiagonal();
  }
  Eigen::VectorXd r(param.M());
  r << w.r1, w.w_r_minus;
  out.R = unpack_upper(r, param.m);
  return out;
}

Eigen::RowVectorXd sigma_delta(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               const LtiSystem& system,
                               const CostParameterization& param) {
  check_size(x.size(), param.n);
  check_size(u.size(), param.m);
  Eigen::RowVectorXd row(param.weight_dim());
  const Eigen::VectorXd xdot = system.A() * x + system.B() * u;
  const Eigen::VectorXd r = sigma_r1(u);
  row << (grad_sigma_v(x) * xdot).transpose(), sigma_q(x, param).transpose(),
      r.tail(r.size() - 1).transpose();
  return row;
}

Eigen::MatrixXd sigma_delta_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              const LtiSystem& system,
                              const CostParameterization& param) {
  check_size(x.size(), param.n);
  check_size(u.size(), param.m);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(param.m, param.weight_dim());
  out.leftCols(param.p_v()) = system.B().transpose() * grad_sigma_v(x).transpose();
  const Eigen::MatrixXd r2 = sigma_r2(u);
  out.rightCols(param.M() - 1) = 2.0 * r2.rightCols(param.M() - 1);
  return out;
}

Eigen::MatrixXd g_matrix(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const LtiSystem& system, const CostParameterization& param) {
  Eigen::MatrixXd g(1 + param.m, param.weight_dim());
  g.row(0) = sigma_delta(x, u, system, param);
  g.bottomRows(param.m) = sigma_delta_u(x, u, system, param);
  return g;
}

Eigen::VectorXd sigma_u_vec(double u1, double r1, int m) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(1 + m);
  out(0) = -u1 * u1 * r1;
  out(1) = -2.0 * u1 * r1;
  return out;
}

BellmanResidual inverse_bellman_error(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u,
                                      const WeightVector& w,
                                      const LtiSystem& system,
                                      const CostParameterization& param) {
  const Eigen::VectorXd ws = w.stacked();
  check_size(ws.size(), param.weight_dim());
  BellmanResidual out;
  out.delta = sigma_delta(x, u, system, param).dot(ws) + u(0) * u(0) * w.r1;
  out.delta_u = sigma_delta_u(x, u, system, param) * ws;
  out.delta_u(0) += 2.0 * u(0) * w.r1;
  return out;
}

BellmanResidual unscaled_bellman_error(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u,
                                       const CostMatrices& weights,
                                       const LtiSystem& system,
                                       const CostParameterization& param) {
  const Eigen::VectorXd wv = pack_upper(weights.S);
  const Eigen::VectorXd wq = pack_q(weights.Q, param);
  const Eigen::VectorXd wr = pack_upper(weights.R);
  const Eigen::MatrixXd grad = grad_sigma_v(x);
  BellmanResidual out;
  out.delta = (grad * (system.A() * x + system.B() * u)).dot(wv) +
              sigma_q(x, param).dot(wq) + sigma_r1(u).dot(wr);
  out.delta_u = system.B().transpose() * grad.transpose() * wv + 2.0 * sigma_r2(u) * wr;
  return out;
}

}  // namespace irlobs
