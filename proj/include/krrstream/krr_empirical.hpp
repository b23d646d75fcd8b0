#pragma once

#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "krrstream/kernels.hpp"
#include "krrstream/linalg.hpp"
#include "krrstream/sample.hpp"

namespace krr {

/// Kernel ridge regression in the span of the stored samples, with an
/// unpenalized bias. State centers on Q = K + ridge I and its maintained
/// inverse: removals take the Schur complement of the survivor block of
/// Q^-1, additions border it with fresh kernel rows, and the dual weights
/// are re-derived afterwards as
///   b = y Q^-1 e / (e^T Q^-1 e),   a = Q^-1 (y - b e).
/// To bound drift, Q^-1 is re-inverted from the exactly spliced Q after
/// kRefreshInterval edit rounds or when the residual of the dual system
/// exceeds kResidualTrigger relative to |y|.
class EmpiricalModel {
 public:
  static constexpr long kRefreshInterval = 1000;
  static constexpr double kResidualTrigger = 1e-6;

  static EmpiricalModel fit(const std::vector<LabeledSample>& samples,
                            const KernelSpec& spec, double ridge = 0.5);

  /// Applies removals then additions through block-inverse updates at
  /// O(n^2 (|C| + |R|)). When removals dominate the survivors the update is
  /// executed as a direct refit of the edited sample set instead.
  EmpiricalModel updated(const EditBatch& batch) const;

  double predict(const Eigen::VectorXd& x) const;

  /// Thresholded prediction for two-class labels; ties go to +1.
  int classify(const Eigen::VectorXd& x, double threshold = 0.0) const;

  static EmpiricalModel restore(KernelSpec spec, double ridge, SymMatrix q_inv,
                                Eigen::VectorXd a, double b,
                                std::vector<SampleId> ids, Eigen::MatrixXd x,
                                Eigen::VectorXd y);

  const KernelSpec& kernel() const { return spec_; }
  double ridge() const { return ridge_; }
  const SymMatrix& q_inverse() const { return q_inv_; }
  const Eigen::VectorXd& dual_coefficients() const { return a_; }
  double bias() const { return b_; }
  Eigen::Index sample_count() const { return y_.size(); }
  Eigen::Index input_dim() const { return x_.rows(); }
  const std::vector<SampleId>& sample_ids() const { return ids_; }
  const Eigen::MatrixXd& samples() const { return x_; }
  const Eigen::VectorXd& labels() const { return y_; }
  bool contains(SampleId id) const { return pos_.count(id) > 0; }

 private:
  EmpiricalModel(KernelSpec spec, double ridge, SymMatrix q, SymMatrix q_inv)
      : spec_(spec), ridge_(ridge), q_(std::move(q)), q_inv_(std::move(q_inv)) {}

  void solve_dual();
  void maybe_refresh();
  void rebuild_index();

  KernelSpec spec_;
  double ridge_;
  SymMatrix q_;      // ridged kernel matrix, maintained exactly by splicing
  SymMatrix q_inv_;  // maintained incrementally, refreshed from q_ on drift
  Eigen::VectorXd a_;
  double b_ = 0.0;
  long rounds_since_refresh_ = 0;

  Eigen::MatrixXd x_;  // input_dim x n, column per sample
  Eigen::VectorXd y_;
  std::vector<SampleId> ids_;
  std::unordered_map<SampleId, Eigen::Index> pos_;
};

/// Proceed while the survivors outnumber the removals; past that point the
/// Schur-complement removal works on a block bigger than the model it leaves
/// behind, so a refit is advised (additions are cheap either way).
BatchAdvice batch_guard(const EmpiricalModel& model, const EditBatch& batch);

}  // namespace krr
