#pragma once

#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "krrstream/kernels.hpp"
#include "krrstream/linalg.hpp"
#include "krrstream/sample.hpp"

namespace krr {

/// Ridge regression in the explicit feature space of a polynomial kernel,
/// with an unpenalized bias term. The model keeps the inverse of the ridged
/// feature Gram matrix S = Phi Phi^T + ridge I together with the running
/// moments p = Phi y and s = Phi e, so edit batches touch only those caches
/// and never re-factorize. Weights always satisfy
///   S u = p - b s,   n b = sum(y) - s^T u.
class IntrinsicModel {
 public:
  static IntrinsicModel fit(const std::vector<LabeledSample>& samples,
                            const KernelSpec& spec, double ridge = 0.5);

  /// Applies one edit batch through the rank-k inverse update and re-derives
  /// (u, b); the receiver is untouched. Cost O(J^2 (|C| + |R|)) plus sample
  /// bookkeeping.
  IntrinsicModel updated(const EditBatch& batch) const;

  double predict(const Eigen::VectorXd& x) const;

  /// Rebuilds a model from previously serialized state, trusting the stored
  /// caches after shape validation.
  static IntrinsicModel restore(KernelSpec spec, double ridge, SymMatrix s_inv,
                                Eigen::VectorXd p, Eigen::VectorXd s,
                                Eigen::VectorXd u, double b,
                                std::vector<SampleId> ids,
                                Eigen::MatrixXd features, Eigen::VectorXd labels,
                                Eigen::Index input_dim);

  const KernelSpec& kernel() const { return spec_; }
  double ridge() const { return ridge_; }
  const SymMatrix& s_inverse() const { return s_inv_; }
  const Eigen::VectorXd& label_moment() const { return p_; }
  const Eigen::VectorXd& feature_sum() const { return s_; }
  const Eigen::VectorXd& weights() const { return u_; }
  double bias() const { return b_; }
  Eigen::Index sample_count() const { return labels_.size(); }
  Eigen::Index feature_dim() const { return s_inv_.order(); }
  Eigen::Index input_dim() const { return input_dim_; }
  const std::vector<SampleId>& sample_ids() const { return ids_; }
  const Eigen::MatrixXd& sample_features() const { return features_; }
  const Eigen::VectorXd& sample_labels() const { return labels_; }
  bool contains(SampleId id) const { return pos_.count(id) > 0; }

 private:
  IntrinsicModel(KernelSpec spec, double ridge, SymMatrix s_inv)
      : spec_(spec), ridge_(ridge), s_inv_(std::move(s_inv)) {}

  void solve_weights();
  void rebuild_index();

  KernelSpec spec_;
  double ridge_;
  SymMatrix s_inv_;
  Eigen::VectorXd p_;
  Eigen::VectorXd s_;
  Eigen::VectorXd u_;
  double b_ = 0.0;
  double label_sum_ = 0.0;
  Eigen::Index input_dim_ = 0;

  // Per-sample state, addressed by stable id; required to materialize the
  // feature columns of removed samples.
  Eigen::MatrixXd features_;  // J x n, column per sample
  Eigen::VectorXd labels_;
  std::vector<SampleId> ids_;
  std::unordered_map<SampleId, Eigen::Index> pos_;
};

/// Proceed while |C| + |R| stays below the feature dimension; at or above it
/// the rank-k correction costs as much as a fresh factorization.
BatchAdvice batch_guard(const IntrinsicModel& model, const EditBatch& batch);

}  // namespace krr
