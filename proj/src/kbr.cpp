#include "krrstream/kbr.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace krr {

namespace {

BayesPrior normalized_prior(BayesPrior prior, Eigen::Index j) {
  if (!(prior.sigma_u2 > 0.0) || !(prior.sigma_b2 > 0.0)) {
    throw Error("BayesPrior: variances must be positive");
  }
  if (prior.mu_u.size() == 0) {
    prior.mu_u = Eigen::VectorXd::Zero(j);
  } else if (prior.mu_u.size() != j) {
    throw DimensionMismatch("BayesPrior: mean length " +
                            std::to_string(prior.mu_u.size()) +
                            " does not match feature dimension " + std::to_string(j));
  }
  return prior;
}

}  // namespace

BayesPosterior BayesPosterior::from_prior(const KernelSpec& spec,
                                          Eigen::Index input_dim,
                                          const BayesPrior& prior) {
  const Eigen::Index j = intrinsic_dim(spec, input_dim);
  BayesPrior p = normalized_prior(prior, j);
  // No evidence: the posterior is the prior itself, written exactly.
  SymMatrix sigma =
      SymMatrix::adopt_symmetric(p.sigma_u2 *
                                 Eigen::MatrixXd::Identity(j, j));
  SymMatrix gram = SymMatrix::adopt_symmetric(Eigen::MatrixXd::Zero(j, j));
  BayesPosterior post(spec, input_dim, std::move(p), std::move(sigma),
                      std::move(gram));
  post.mu_ = post.prior_.mu_u;
  post.xy_ = Eigen::VectorXd::Zero(j);
  post.features_.resize(j, 0);
  post.labels_.resize(0);
  return post;
}

BayesPosterior BayesPosterior::fit(const std::vector<LabeledSample>& samples,
                                   const KernelSpec& spec,
                                   const BayesPrior& prior) {
  if (samples.empty()) {
    throw EmptyModel("BayesPosterior::fit: no samples (use from_prior)");
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index input_dim = samples.front().x.size();
  const Eigen::Index j = intrinsic_dim(spec, input_dim);
  BayesPrior p = normalized_prior(prior, j);

  Eigen::MatrixXd x(input_dim, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LabeledSample& sample = samples[static_cast<std::size_t>(i)];
    if (sample.x.size() != input_dim) {
      throw DimensionMismatch("BayesPosterior::fit: sample dimension " +
                              std::to_string(sample.x.size()) +
                              " does not match " + std::to_string(input_dim));
    }
    x.col(i) = sample.x;
    y(i) = sample.y;
  }

  const Eigen::MatrixXd phi = feature_matrix(spec, x);
  Eigen::MatrixXd gram_raw = Eigen::MatrixXd::Zero(j, j);
  gram_raw.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  gram_raw.triangularView<Eigen::StrictlyUpper>() =
      gram_raw.triangularView<Eigen::StrictlyLower>().transpose();

  Eigen::MatrixXd precision = gram_raw / p.sigma_b2;
  precision.diagonal().array() += 1.0 / p.sigma_u2;
  SymMatrix sigma(detail::invert_spd(precision, "BayesPosterior::fit"));

  BayesPosterior post(spec, input_dim, std::move(p), std::move(sigma),
                      SymMatrix(gram_raw));
  post.xy_ = phi * y;
  post.features_ = phi;
  post.labels_ = y;
  post.ids_.reserve(samples.size());
  for (const auto& sample : samples) post.ids_.push_back(sample.id);
  post.rebuild_index();
  if (post.pos_.size() != samples.size()) {
    throw IndexOutOfRange("BayesPosterior::fit: duplicate sample ids");
  }
  post.solve_mean();
  return post;
}

void BayesPosterior::rebuild_index() {
  pos_.clear();
  pos_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    pos_.emplace(ids_[i], static_cast<Eigen::Index>(i));
  }
}

void BayesPosterior::solve_mean() {
  mu_ = sigma_.mat() *
        (prior_.mu_u / prior_.sigma_u2 + xy_ / prior_.sigma_b2);
}

BayesPosterior BayesPosterior::updated(const EditBatch& batch) const {
  const auto n = sample_count();
  const auto n_add = static_cast<Eigen::Index>(batch.add.size());
  const auto n_rem = static_cast<Eigen::Index>(batch.remove.size());
  const Eigen::Index j = feature_dim();

  std::unordered_map<SampleId, Eigen::Index> removed;
  removed.reserve(batch.remove.size());
  for (SampleId id : batch.remove) {
    auto it = pos_.find(id);
    if (it == pos_.end()) {
      throw IndexOutOfRange("BayesPosterior::updated: unknown sample id " +
                            std::to_string(id));
    }
    if (!removed.emplace(id, it->second).second) {
      throw IndexOutOfRange("BayesPosterior::updated: duplicate removal id " +
                            std::to_string(id));
    }
  }

  Eigen::MatrixXd add_cols(j, n_add);
  Eigen::VectorXd add_labels(n_add);
  for (Eigen::Index c = 0; c < n_add; ++c) {
    const LabeledSample& sample = batch.add[static_cast<std::size_t>(c)];
    if (sample.x.size() != input_dim_) {
      throw DimensionMismatch("BayesPosterior::updated: sample dimension " +
                              std::to_string(sample.x.size()) +
                              " does not match " + std::to_string(input_dim_));
    }
    if (pos_.count(sample.id) > 0 || removed.count(sample.id) > 0) {
      throw IndexOutOfRange("BayesPosterior::updated: added id " +
                            std::to_string(sample.id) + " already present");
    }
    add_cols.col(c) = feature_map(spec_, sample.x);
    add_labels(c) = sample.y;
  }

  Eigen::MatrixXd rem_cols(j, n_rem);
  Eigen::VectorXd rem_labels(n_rem);
  {
    Eigen::Index c = 0;
    for (SampleId id : batch.remove) {
      const Eigen::Index at = removed.at(id);
      rem_cols.col(c) = features_.col(at);
      rem_labels(c) = labels_(at);
      ++c;
    }
  }

  // Posterior precision gains (loses) phi phi^T / sigma_b2 per sample, so the
  // covariance sees the same rank-k identity with columns scaled by 1/sigma_b.
  const double inv_sb = 1.0 / std::sqrt(prior_.sigma_b2);
  SymMatrix sigma_next =
      rankk_update(sigma_, add_cols * inv_sb, rem_cols * inv_sb);

  Eigen::MatrixXd gram_next = gram_.mat();
  if (n_add > 0) {
    gram_next.selfadjointView<Eigen::Lower>().rankUpdate(add_cols, 1.0);
  }
  if (n_rem > 0) {
    gram_next.selfadjointView<Eigen::Lower>().rankUpdate(rem_cols, -1.0);
  }
  gram_next.triangularView<Eigen::StrictlyUpper>() =
      gram_next.triangularView<Eigen::StrictlyLower>().transpose();

  BayesPosterior next(spec_, input_dim_, prior_, std::move(sigma_next),
                      SymMatrix(gram_next));
  next.xy_ = xy_ + add_cols * add_labels - rem_cols * rem_labels;

  const Eigen::Index n_new = n + n_add - n_rem;
  next.features_.resize(j, n_new);
  next.labels_.resize(n_new);
  next.ids_.reserve(static_cast<std::size_t>(n_new));
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (removed.count(ids_[static_cast<std::size_t>(i)]) > 0) continue;
    next.features_.col(at) = features_.col(i);
    next.labels_(at) = labels_(i);
    next.ids_.push_back(ids_[static_cast<std::size_t>(i)]);
    ++at;
  }
  for (Eigen::Index c = 0; c < n_add; ++c) {
    next.features_.col(at) = add_cols.col(c);
    next.labels_(at) = add_labels(c);
    next.ids_.push_back(batch.add[static_cast<std::size_t>(c)].id);
    ++at;
  }
  next.rebuild_index();
  next.solve_mean();
  return next;
}

BayesPosterior BayesPosterior::rebased(const BayesPrior& prior) const {
  const Eigen::Index j = feature_dim();
  BayesPrior p = normalized_prior(prior, j);
  Eigen::MatrixXd precision = gram_.mat() / p.sigma_b2;
  precision.diagonal().array() += 1.0 / p.sigma_u2;
  SymMatrix sigma(detail::invert_spd(precision, "BayesPosterior::rebased"));

  BayesPosterior next(spec_, input_dim_, std::move(p), std::move(sigma), gram_);
  next.xy_ = xy_;
  next.features_ = features_;
  next.labels_ = labels_;
  next.ids_ = ids_;
  next.rebuild_index();
  next.solve_mean();
  return next;
}

PredictiveDist BayesPosterior::predict_distribution(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim_) {
    throw DimensionMismatch("BayesPosterior::predict_distribution: query dimension " +
                            std::to_string(x.size()) + " does not match " +
                            std::to_string(input_dim_));
  }
  const Eigen::VectorXd phi = feature_map(spec_, x);
  const double quad = std::max(0.0, phi.dot(sigma_.mat() * phi));
  return {phi.dot(mu_), prior_.sigma_b2 + quad};
}

BayesPosterior BayesPosterior::restore(KernelSpec spec, Eigen::Index input_dim,
                                       BayesPrior prior, Eigen::VectorXd mu,
                                       SymMatrix sigma, SymMatrix gram,
                                       Eigen::VectorXd xy,
                                       std::vector<SampleId> ids,
                                       Eigen::MatrixXd features,
                                       Eigen::VectorXd labels) {
  const Eigen::Index j = sigma.order();
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (mu.size() != j || gram.order() != j || xy.size() != j ||
      features.rows() != j || features.cols() != n || labels.size() != n) {
    throw DimensionMismatch("BayesPosterior::restore: inconsistent field shapes");
  }
  BayesPrior p = normalized_prior(std::move(prior), j);
  BayesPosterior post(spec, input_dim, std::move(p), std::move(sigma),
                      std::move(gram));
  post.mu_ = std::move(mu);
  post.xy_ = std::move(xy);
  post.features_ = std::move(features);
  post.labels_ = std::move(labels);
  post.ids_ = std::move(ids);
  post.rebuild_index();
  if (post.pos_.size() != post.ids_.size()) {
    throw IndexOutOfRange("BayesPosterior::restore: duplicate sample ids");
  }
  return post;
}

}  // namespace krr
