#include "krrstream/krr_intrinsic.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace krr {

namespace {

void check_input_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": sample dimension " +
                            std::to_string(got) + " does not match model input dimension " +
                            std::to_string(want));
  }
}

}  // namespace

IntrinsicModel IntrinsicModel::fit(const std::vector<LabeledSample>& samples,
                                   const KernelSpec& spec, double ridge) {
  if (samples.empty()) {
    throw EmptyModel("IntrinsicModel::fit: no samples");
  }
  if (!(ridge > 0.0)) {
    throw Error("IntrinsicModel::fit: ridge must be positive");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index input_dim = samples.front().x.size();

  Eigen::MatrixXd x(input_dim, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    check_input_dim(samples[static_cast<std::size_t>(i)].x.size(), input_dim,
                    "IntrinsicModel::fit");
    x.col(i) = samples[static_cast<std::size_t>(i)].x;
    y(i) = samples[static_cast<std::size_t>(i)].y;
  }

  const Eigen::MatrixXd phi = feature_matrix(spec, x);
  const Eigen::Index j = phi.rows();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(j, j);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  gram.triangularView<Eigen::StrictlyUpper>() =
      gram.triangularView<Eigen::StrictlyLower>().transpose();
  gram.diagonal().array() += ridge;

  IntrinsicModel model(spec, ridge,
                       SymMatrix(detail::invert_spd(gram, "IntrinsicModel::fit")));
  model.input_dim_ = input_dim;
  model.features_ = phi;
  model.labels_ = y;
  model.p_ = phi * y;
  model.s_ = phi.rowwise().sum();
  model.label_sum_ = y.sum();
  model.ids_.reserve(samples.size());
  for (const auto& sample : samples) model.ids_.push_back(sample.id);
  model.rebuild_index();
  if (model.pos_.size() != samples.size()) {
    throw IndexOutOfRange("IntrinsicModel::fit: duplicate sample ids");
  }
  model.solve_weights();
  return model;
}

void IntrinsicModel::rebuild_index() {
  pos_.clear();
  pos_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    pos_.emplace(ids_[i], static_cast<Eigen::Index>(i));
  }
}

// Two-stage elimination of the bordered system
//   [S  s; s^T n] [u; b] = [p; sum(y)]
// using only the cached S^-1: with g = S^-1 p and w = S^-1 s, the bias pivot
// is gamma = n - s^T w, then b = (sum(y) - s^T g) / gamma and u = g - w b.
void IntrinsicModel::solve_weights() {
  const Eigen::VectorXd g = s_inv_.mat() * p_;
  const Eigen::VectorXd w = s_inv_.mat() * s_;
  const double n = static_cast<double>(sample_count());
  const double sw = s_.dot(w);
  const double gamma = n - sw;
  if (std::abs(gamma) <= detail::kPivotTolerance * (1.0 + n + std::abs(sw))) {
    throw SingularPivot("IntrinsicModel: bias pivot n - s^T S^-1 s is singular");
  }
  b_ = (label_sum_ - s_.dot(g)) / gamma;
  u_ = g - w * b_;
}

IntrinsicModel IntrinsicModel::updated(const EditBatch& batch) const {
  const Eigen::Index n_add = static_cast<Eigen::Index>(batch.add.size());
  const Eigen::Index n_rem = static_cast<Eigen::Index>(batch.remove.size());
  const Eigen::Index n_new = sample_count() + n_add - n_rem;
  if (n_new < 1) {
    throw EmptyModel("IntrinsicModel::updated: edit would leave " +
                     std::to_string(n_new) + " samples");
  }

  // Resolve removals against the id index before touching any state.
  std::unordered_map<SampleId, Eigen::Index> removed;
  removed.reserve(batch.remove.size());
  for (SampleId id : batch.remove) {
    auto it = pos_.find(id);
    if (it == pos_.end()) {
      throw IndexOutOfRange("IntrinsicModel::updated: unknown sample id " +
                            std::to_string(id));
    }
    if (!removed.emplace(id, it->second).second) {
      throw IndexOutOfRange("IntrinsicModel::updated: duplicate removal id " +
                            std::to_string(id));
    }
  }

  const Eigen::Index j = feature_dim();
  Eigen::MatrixXd add_cols(j, n_add);
  Eigen::VectorXd add_labels(n_add);
  for (Eigen::Index c = 0; c < n_add; ++c) {
    const LabeledSample& sample = batch.add[static_cast<std::size_t>(c)];
    check_input_dim(sample.x.size(), input_dim_, "IntrinsicModel::updated");
    if (pos_.count(sample.id) > 0 || removed.count(sample.id) > 0) {
      throw IndexOutOfRange("IntrinsicModel::updated: added id " +
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

  IntrinsicModel next(spec_, ridge_, rankk_update(s_inv_, add_cols, rem_cols));
  next.input_dim_ = input_dim_;
  next.p_ = p_ + add_cols * add_labels - rem_cols * rem_labels;
  next.s_ = s_ + add_cols.rowwise().sum() - rem_cols.rowwise().sum();
  next.label_sum_ = label_sum_ + add_labels.sum() - rem_labels.sum();

  // Survivors keep their relative order; additions append at the end.
  next.features_.resize(j, n_new);
  next.labels_.resize(n_new);
  next.ids_.reserve(static_cast<std::size_t>(n_new));
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < sample_count(); ++i) {
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
  next.solve_weights();
  return next;
}

double IntrinsicModel::predict(const Eigen::VectorXd& x) const {
  check_input_dim(x.size(), input_dim_, "IntrinsicModel::predict");
  return u_.dot(feature_map(spec_, x)) + b_;
}

IntrinsicModel IntrinsicModel::restore(KernelSpec spec, double ridge,
                                       SymMatrix s_inv, Eigen::VectorXd p,
                                       Eigen::VectorXd s, Eigen::VectorXd u,
                                       double b, std::vector<SampleId> ids,
                                       Eigen::MatrixXd features,
                                       Eigen::VectorXd labels,
                                       Eigen::Index input_dim) {
  const Eigen::Index j = s_inv.order();
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (p.size() != j || s.size() != j || u.size() != j || features.rows() != j ||
      features.cols() != n || labels.size() != n || n < 1) {
    throw DimensionMismatch("IntrinsicModel::restore: inconsistent field shapes");
  }
  IntrinsicModel model(spec, ridge, std::move(s_inv));
  model.p_ = std::move(p);
  model.s_ = std::move(s);
  model.u_ = std::move(u);
  model.b_ = b;
  model.input_dim_ = input_dim;
  model.features_ = std::move(features);
  model.labels_ = std::move(labels);
  model.label_sum_ = model.labels_.sum();
  model.ids_ = std::move(ids);
  model.rebuild_index();
  if (model.pos_.size() != model.ids_.size()) {
    throw IndexOutOfRange("IntrinsicModel::restore: duplicate sample ids");
  }
  return model;
}

BatchAdvice batch_guard(const IntrinsicModel& model, const EditBatch& batch) {
  const auto edits =
      static_cast<Eigen::Index>(batch.add.size() + batch.remove.size());
  return edits >= model.feature_dim() ? BatchAdvice::AdviseRefit
                                      : BatchAdvice::Proceed;
}

}  // namespace krr
