#pragma once

#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "krrstream/kernels.hpp"
#include "krrstream/linalg.hpp"
#include "krrstream/sample.hpp"

namespace krr {

/// Isotropic Gaussian prior over the feature-space weights, plus the
/// observation noise variance. An empty mean stands for the zero vector.
struct BayesPrior {
  Eigen::VectorXd mu_u;
  double sigma_u2 = 0.01;
  double sigma_b2 = 0.01;
};

struct PredictiveDist {
  double mean = 0.0;
  double variance = 0.0;
};

/// Bayesian regression over the explicit polynomial feature space with a
/// conjugate Gaussian weight prior. The posterior
///   Sigma = (I/sigma_u2 + Phi Phi^T / sigma_b2)^-1,
///   mu    = Sigma (mu_u/sigma_u2 + Phi y / sigma_b2)
/// is maintained under edits by rank-k updates of Sigma using feature
/// columns scaled by 1/sigma_b, while the evidence moments Phi Phi^T and
/// Phi y accumulate additively. Removing an increment restores the earlier
/// posterior (the update is invertible).
class BayesPosterior {
 public:
  static BayesPosterior fit(const std::vector<LabeledSample>& samples,
                            const KernelSpec& spec, const BayesPrior& prior);

  /// Posterior with no evidence: mu = mu_u, Sigma = sigma_u2 I.
  static BayesPosterior from_prior(const KernelSpec& spec,
                                   Eigen::Index input_dim,
                                   const BayesPrior& prior);

  BayesPosterior updated(const EditBatch& batch) const;

  /// Same evidence re-weighted under a different prior (fresh inversion).
  BayesPosterior rebased(const BayesPrior& prior) const;

  /// Predictive response distribution at a query point:
  /// mean = phi^T mu, variance = sigma_b2 + phi^T Sigma phi. The variance
  /// is never below the observation noise floor sigma_b2.
  PredictiveDist predict_distribution(const Eigen::VectorXd& x) const;

  static BayesPosterior restore(KernelSpec spec, Eigen::Index input_dim,
                                BayesPrior prior, Eigen::VectorXd mu,
                                SymMatrix sigma, SymMatrix gram,
                                Eigen::VectorXd xy, std::vector<SampleId> ids,
                                Eigen::MatrixXd features,
                                Eigen::VectorXd labels);

  const KernelSpec& kernel() const { return spec_; }
  const BayesPrior& prior() const { return prior_; }
  const Eigen::VectorXd& mean() const { return mu_; }
  const SymMatrix& covariance() const { return sigma_; }
  const SymMatrix& gram() const { return gram_; }
  const Eigen::VectorXd& label_moment() const { return xy_; }
  Eigen::Index sample_count() const { return labels_.size(); }
  Eigen::Index feature_dim() const { return sigma_.order(); }
  Eigen::Index input_dim() const { return input_dim_; }
  const std::vector<SampleId>& sample_ids() const { return ids_; }
  const Eigen::MatrixXd& sample_features() const { return features_; }
  const Eigen::VectorXd& sample_labels() const { return labels_; }
  bool contains(SampleId id) const { return pos_.count(id) > 0; }

 private:
  BayesPosterior(KernelSpec spec, Eigen::Index input_dim, BayesPrior prior,
                 SymMatrix sigma, SymMatrix gram)
      : spec_(spec),
        input_dim_(input_dim),
        prior_(std::move(prior)),
        sigma_(std::move(sigma)),
        gram_(std::move(gram)) {}

  void solve_mean();
  void rebuild_index();

  KernelSpec spec_;
  Eigen::Index input_dim_;
  BayesPrior prior_;
  SymMatrix sigma_;  // posterior covariance
  Eigen::VectorXd mu_;
  SymMatrix gram_;   // evidence moment Phi Phi^T
  Eigen::VectorXd xy_;  // evidence moment Phi y

  // Feature store keyed by id, so removals can rebuild Phi_R columns.
  Eigen::MatrixXd features_;  // J x n
  Eigen::VectorXd labels_;
  std::vector<SampleId> ids_;
  std::unordered_map<SampleId, Eigen::Index> pos_;
};

}  // namespace krr
