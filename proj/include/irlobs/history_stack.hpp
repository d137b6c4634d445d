#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "irlobs/features.hpp"
#include "irlobs/lti.hpp"

namespace irlobs {

struct StackRecord {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd u;
  double t = 0.0;
  /// True state at t when the caller knows it (simulation diagnostics only).
  std::optional<Eigen::VectorXd> x_true;
  // Cached (1+m) x d regressor block and its target sigma_u.
  Eigen::MatrixXd g;
  Eigen::VectorXd target;
};

struct HistoryStackOptions {
  int capacity = 5;
  double purge_interval = 0.5;
  int buffer_size = 200;
  /// Relative decrease of cond(S'S) required before a swap is accepted.
  double swap_improvement = 0.01;
  /// After greedy refresh selection, try single swaps against the pool.
  bool refine_refresh = true;
};

struct AssembledStack {
  Eigen::MatrixXd sigma_hat;  // N(1+m) x d
  Eigen::VectorXd sigma_u;    // N(1+m)
};

/// Finite record of past (x_hat, u, t) samples for the history-stack observer.
///
/// Every offered sample goes into a ring buffer of recent candidates; the
/// record set itself changes either by a conditioning-improving swap in
/// offer_sample or wholesale in purge_and_refresh. Records are kept in
/// increasing time order.
class HistoryStack {
 public:
  HistoryStack(LtiSystem system, CostParameterization param, double r1,
               HistoryStackOptions options = {});

  /// Returns whether the record set changed. Throws std::invalid_argument
  /// ("non-finite sample") for NaN/inf entries and when t does not exceed
  /// the newest buffered time.
  bool offer_sample(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u, double t,
                    std::optional<Eigen::VectorXd> x_true = std::nullopt);

  /// Replaces all records by a full-rank selection of buffered samples newer
  /// than the stack content at the previous refresh, once purge_interval has
  /// elapsed since the last refresh. All or nothing.
  bool purge_and_refresh(double t);

  /// Throws std::logic_error("stack incomplete") when fewer than N records.
  AssembledStack assemble() const;

  /// Sigma evaluated at the stored true states; throws std::logic_error when
  /// a record lacks one or the stack is incomplete.
  Eigen::MatrixXd true_sigma() const;

  bool full() const { return static_cast<int>(records_.size()) == options_.capacity; }
  int size() const { return static_cast<int>(records_.size()); }
  int capacity() const { return options_.capacity; }
  int weight_dim() const { return param_.weight_dim(); }

  /// False unless full; rank uses the library-wide SVD threshold.
  bool is_full_rank() const;
  /// cond(S'S), +infinity when incomplete or rank-deficient.
  double condition_number() const;
  int rank() const;

  const std::vector<StackRecord>& records() const { return records_; }
  std::size_t buffered() const { return buffer_.size(); }
  double last_purge_time() const { return last_purge_time_; }
  /// Incremented whenever the record set changes.
  std::uint64_t version() const { return version_; }

  const HistoryStackOptions& options() const { return options_; }
  const CostParameterization& param() const { return param_; }
  double r1() const { return r1_; }

 private:
  StackRecord make_record(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& u,
                          double t, std::optional<Eigen::VectorXd> x_true) const;
  Eigen::MatrixXd stacked_g(const std::vector<const StackRecord*>& recs) const;
  void set_records(std::vector<StackRecord> recs);

  LtiSystem system_;
  CostParameterization param_;
  double r1_;
  HistoryStackOptions options_;

  std::vector<StackRecord> records_;
  std::deque<StackRecord> buffer_;
  double last_purge_time_ = 0.0;
  double horizon_ = -1e300;  // pool for refresh holds samples newer than this
  bool horizon_set_ = false;
  std::uint64_t version_ = 0;

  // Cached spectral data of the current record set.
  int rank_ = 0;
  double cond_ = 0.0;
};

}  // namespace irlobs
