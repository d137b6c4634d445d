#include "irlobs/history_stack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "irlobs/linalg.hpp"

namespace irlobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// cond of a Gram matrix from its eigenvalues. Cheap, but only trustworthy
// well away from singularity, so callers confirm decisions with an SVD.
double gram_cond(const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev(ev.size() - 1);
  const double lmin = ev(0);
  if (!(lmax > 0.0) || lmin <= lmax * 1e-14) return kInf;
  return lmax / lmin;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

HistoryStack::HistoryStack(LtiSystem system, CostParameterization param, double r1,
                           HistoryStackOptions options)
    : system_(std::move(system)), param_(param), r1_(r1), options_(options) {
  if (options_.capacity < 1) throw std::invalid_argument("stack capacity must be >= 1");
  if (options_.buffer_size < options_.capacity)
    throw std::invalid_argument("candidate buffer smaller than stack capacity");
  if (!(options_.purge_interval > 0.0))
    throw std::invalid_argument("purge interval must be > 0");
  if (param_.n != system_.n() || param_.m != system_.m())
    throw std::invalid_argument("parameterization does not match system");
  cond_ = kInf;
}

StackRecord HistoryStack::make_record(const Eigen::VectorXd& x_hat,
                                      const Eigen::VectorXd& u, double t,
                                      std::optional<Eigen::VectorXd> x_true) const {
  StackRecord rec;
  rec.x_hat = x_hat;
  rec.u = u;
  rec.t = t;
  rec.x_true = std::move(x_true);
  rec.g = g_matrix(x_hat, u, system_, param_);
  rec.target = sigma_u_vec(u(0), r1_, param_.m);
  return rec;
}

Eigen::MatrixXd HistoryStack::stacked_g(const std::vector<const StackRecord*>& recs) const {
  const int block = 1 + param_.m;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(recs.size()) * block, param_.weight_dim());
  for (std::size_t i = 0; i < recs.size(); ++i)
    out.middleRows(static_cast<Eigen::Index>(i) * block, block) = recs[i]->g;
  return out;
}

void HistoryStack::set_records(std::vector<StackRecord> recs) {
  std::sort(recs.begin(), recs.end(),
            [](const StackRecord& a, const StackRecord& b) { return a.t < b.t; });
  records_ = std::move(recs);
  ++version_;
  std::vector<const StackRecord*> ptrs;
  for (const auto& r : records_) ptrs.push_back(&r);
  const Eigen::MatrixXd M = stacked_g(ptrs);
  rank_ = numerical_rank(M);
  cond_ = gram_condition_number(M);
}

bool HistoryStack::offer_sample(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u,
                                double t, std::optional<Eigen::VectorXd> x_true) {
  if (x_hat.size() != param_.n || u.size() != param_.m ||
      (x_true && x_true->size() != param_.n))
    throw std::invalid_argument("dimension error");
  if (!finite(x_hat) || !finite(u) || !std::isfinite(t) || (x_true && !finite(*x_true)))
    throw std::invalid_argument("non-finite sample");
  if (!buffer_.empty() && t <= buffer_.back().t)
    throw std::invalid_argument("sample time must increase");
  if (!records_.empty() && t <= records_.back().t)
    throw std::invalid_argument("sample time must increase");

  StackRecord rec = make_record(x_hat, u, t, std::move(x_true));
  buffer_.push_back(rec);
  while (static_cast<int>(buffer_.size()) > options_.buffer_size) buffer_.pop_front();

  if (!full()) {
    std::vector<StackRecord> recs = records_;
    recs.push_back(std::move(rec));
    set_records(std::move(recs));
    if (full() && !horizon_set_) {
      horizon_ = records_.back().t;
      horizon_set_ = true;
    }
    return true;
  }

  const int N = options_.capacity;
  const int d = param_.weight_dim();
  int best = -1;
  int best_rank = rank_;
  double best_cond = kInf;

  if (rank_ < d) {
    // Rank-deficient: only a rank increase counts.
    for (int i = 0; i < N; ++i) {
      std::vector<const StackRecord*> ptrs;
      for (int j = 0; j < N; ++j)
        if (j != i) ptrs.push_back(&records_[static_cast<std::size_t>(j)]);
      ptrs.push_back(&rec);
      const Eigen::MatrixXd M = stacked_g(ptrs);
      const int r = numerical_rank(M);
      const double c = gram_condition_number(M);
      if (r > best_rank || (r == best_rank && best >= 0 && c < best_cond)) {
        best = i;
        best_rank = r;
        best_cond = c;
      }
    }
  } else {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
    for (const auto& r : records_) G.noalias() += r.g.transpose() * r.g;
    const Eigen::MatrixXd G_new = rec.g.transpose() * rec.g;
    for (int i = 0; i < N; ++i) {
      const auto& gi = records_[static_cast<std::size_t>(i)].g;
      const double c = gram_cond(G - gi.transpose() * gi + G_new);
      if (c < best_cond) {
        best_cond = c;
        best = i;
      }
    }
    if (best >= 0 && best_cond < (1.0 - options_.swap_improvement) * cond_) {
      // Confirm with the SVD before committing.
      std::vector<const StackRecord*> ptrs;
      for (int j = 0; j < N; ++j)
        if (j != best) ptrs.push_back(&records_[static_cast<std::size_t>(j)]);
      ptrs.push_back(&rec);
      const Eigen::MatrixXd M = stacked_g(ptrs);
      best_cond = gram_condition_number(M);
      best_rank = numerical_rank(M);
      if (best_rank < d || !(best_cond < (1.0 - options_.swap_improvement) * cond_))
        best = -1;
    } else {
      best = -1;
    }
  }
  if (best < 0) return false;

  std::vector<StackRecord> recs;
  recs.reserve(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j)
    if (j != best) recs.push_back(records_[static_cast<std::size_t>(j)]);
  recs.push_back(std::move(rec));
  set_records(std::move(recs));
  return true;
}

bool HistoryStack::purge_and_refresh(double t) {
  if (t - last_purge_time_ < options_.purge_interval) return false;

  std::vector<const StackRecord*> pool;
  for (const auto& b : buffer_)
    if (!horizon_set_ || b.t > horizon_) pool.push_back(&b);
  const int N = options_.capacity;
  const int d = param_.weight_dim();
  if (static_cast<int>(pool.size()) < N) return false;

  std::vector<Eigen::MatrixXd> grams;
  grams.reserve(pool.size());
  double scale = 0.0;
  for (const auto* p : pool) {
    grams.push_back(p->g.transpose() * p->g);
    scale = std::max(scale, grams.back().trace());
  }
  if (!(scale > 0.0)) return false;

  // Greedy log-det selection; the ridge keeps early picks comparable while
  // the partial Gram is still singular.
  const Eigen::MatrixXd ridge = 1e-9 * scale * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  std::vector<int> chosen;
  std::vector<bool> used(pool.size(), false);
  for (int k = 0; k < N; ++k) {
    int pick = -1;
    double best = -kInf;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      Eigen::LLT<Eigen::MatrixXd> llt(G + grams[i] + ridge);
      if (llt.info() != Eigen::Success) continue;
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      if (logdet > best) {
        best = logdet;
        pick = static_cast<int>(i);
      }
    }
    if (pick < 0) return false;
    used[static_cast<std::size_t>(pick)] = true;
    chosen.push_back(pick);
    G += grams[static_cast<std::size_t>(pick)];
  }

  if (options_.refine_refresh) {
    double cur = gram_cond(G);
    for (int slot = 0; slot < N && std::isfinite(cur); ++slot) {
      const auto out_idx = static_cast<std::size_t>(chosen[static_cast<std::size_t>(slot)]);
      int swap_in = -1;
      double swap_cond = cur;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (used[i]) continue;
        const double c = gram_cond(G - grams[out_idx] + grams[i]);
        if (c < swap_cond) {
          swap_cond = c;
          swap_in = static_cast<int>(i);
        }
      }
      if (swap_in >= 0 && swap_cond < (1.0 - options_.swap_improvement) * cur) {
        G += grams[static_cast<std::size_t>(swap_in)] - grams[out_idx];
        used[out_idx] = false;
        used[static_cast<std::size_t>(swap_in)] = true;
        chosen[static_cast<std::size_t>(slot)] = swap_in;
        cur = swap_cond;
      }
    }
  }

  std::vector<const StackRecord*> picked;
  for (int c : chosen) picked.push_back(pool[static_cast<std::size_t>(c)]);
  if (numerical_rank(stacked_g(picked)) < d) return false;

  std::vector<StackRecord> recs;
  for (const auto* p : picked) recs.push_back(*p);
  set_records(std::move(recs));
  last_purge_time_ = t;
  horizon_ = records_.back().t;
  horizon_set_ = true;
  return true;
}

AssembledStack HistoryStack::assemble() const {
  if (!full()) throw std::logic_error("stack incomplete");
  const int block = 1 + param_.m;
  AssembledStack out;
  out.sigma_hat.resize(options_.capacity * block, param_.weight_dim());
  out.sigma_u.resize(options_.capacity * block);
  for (int i = 0; i < options_.capacity; ++i) {
    const auto& r = records_[static_cast<std::size_t>(i)];
    out.sigma_hat.middleRows(i * block, block) = r.g;
    out.sigma_u.segment(i * block, block) = r.target;
  }
  return out;
}

Eigen::MatrixXd HistoryStack::true_sigma() const {
  if (!full()) throw std::logic_error("stack incomplete");
  const int block = 1 + param_.m;
  Eigen::MatrixXd out(options_.capacity * block, param_.weight_dim());
  for (int i = 0; i < options_.capacity; ++i) {
    const auto& r = records_[static_cast<std::size_t>(i)];
    if (!r.x_true) throw std::logic_error("record has no true state");
    out.middleRows(i * block, block) = g_matrix(*r.x_true, r.u, system_, param_);
  }
  return out;
}

bool HistoryStack::is_full_rank() const {
  return full() && rank_ == param_.weight_dim();
}

double HistoryStack::condition_number() const {
  return is_full_rank() ? cond_ : kInf;
}

int HistoryStack::rank() const { return rank_; }

}  // namespace irlobs
