#include "krrstream/krr_empirical.hpp"

#include <cmath>
#include <optional>
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

EmpiricalModel EmpiricalModel::fit(const std::vector<LabeledSample>& samples,
                                   const KernelSpec& spec, double ridge) {
  if (samples.empty()) {
    throw EmptyModel("EmpiricalModel::fit: no samples");
  }
  if (!(ridge > 0.0)) {
    throw Error("EmpiricalModel::fit: ridge must be positive");
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index input_dim = samples.front().x.size();

  Eigen::MatrixXd x(input_dim, n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    check_input_dim(samples[static_cast<std::size_t>(i)].x.size(), input_dim,
                    "EmpiricalModel::fit");
    x.col(i) = samples[static_cast<std::size_t>(i)].x;
    y(i) = samples[static_cast<std::size_t>(i)].y;
  }

  Eigen::MatrixXd q_raw = kernel_cross(spec, x, x);
  q_raw.diagonal().array() += ridge;
  SymMatrix q(q_raw);
  SymMatrix q_inv(detail::invert_spd(q.mat(), "EmpiricalModel::fit"));

  EmpiricalModel model(spec, ridge, std::move(q), std::move(q_inv));
  model.x_ = std::move(x);
  model.y_ = std::move(y);
  model.ids_.reserve(samples.size());
  for (const auto& sample : samples) model.ids_.push_back(sample.id);
  model.rebuild_index();
  if (model.pos_.size() != samples.size()) {
    throw IndexOutOfRange("EmpiricalModel::fit: duplicate sample ids");
  }
  model.solve_dual();
  return model;
}

void EmpiricalModel::rebuild_index() {
  pos_.clear();
  pos_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    pos_.emplace(ids_[i], static_cast<Eigen::Index>(i));
  }
}

void EmpiricalModel::solve_dual() {
  // One pass over Q^-1 produces both solves: sol = Q^-1 [e | y].
  Eigen::MatrixXd rhs(y_.size(), 2);
  rhs.col(0).setOnes();
  rhs.col(1) = y_;
  const Eigen::MatrixXd sol = q_inv_.mat() * rhs;
  const double denom = sol.col(0).sum();  // e^T Q^-1 e
  if (std::abs(denom) <=
      detail::kPivotTolerance * (1.0 + sol.col(0).cwiseAbs().sum())) {
    throw SingularPivot("EmpiricalModel: bias denominator e^T Q^-1 e is singular");
  }
  b_ = y_.dot(sol.col(0)) / denom;
  a_ = sol.col(1) - b_ * sol.col(0);
}

void EmpiricalModel::maybe_refresh() {
  ++rounds_since_refresh_;
  // Drift is probed on a strided subset of residual rows; a full pass over Q
  // per edit would dominate single-edit updates at large n. Q is symmetric,
  // so row i is read as the contiguous column i.
  const Eigen::Index n = y_.size();
  const Eigen::Index stride = std::max<Eigen::Index>(1, n / 128);
  double residual = 0.0;
  for (Eigen::Index i = 0; i < n; i += stride) {
    residual = std::max(residual, std::abs(q_.mat().col(i).dot(a_) -
                                           (y_(i) - b_)));
  }
  const double scale = std::max(1.0, y_.cwiseAbs().maxCoeff());
  if (rounds_since_refresh_ < kRefreshInterval &&
      residual <= kResidualTrigger * scale) {
    return;
  }
  q_inv_ = SymMatrix(detail::invert_spd(q_.mat(), "EmpiricalModel refresh"));
  rounds_since_refresh_ = 0;
  solve_dual();
}

EmpiricalModel EmpiricalModel::updated(const EditBatch& batch) const {
  const auto n = sample_count();
  const auto n_add = static_cast<Eigen::Index>(batch.add.size());
  const auto n_rem = static_cast<Eigen::Index>(batch.remove.size());
  const Eigen::Index n_new = n + n_add - n_rem;
  if (n_new < 1) {
    throw EmptyModel("EmpiricalModel::updated: edit would leave " +
                     std::to_string(n_new) + " samples");
  }

  std::unordered_map<SampleId, Eigen::Index> removed;
  removed.reserve(batch.remove.size());
  std::vector<Eigen::Index> rem_pos;
  rem_pos.reserve(batch.remove.size());
  for (SampleId id : batch.remove) {
    auto it = pos_.find(id);
    if (it == pos_.end()) {
      throw IndexOutOfRange("EmpiricalModel::updated: unknown sample id " +
                            std::to_string(id));
    }
    if (!removed.emplace(id, it->second).second) {
      throw IndexOutOfRange("EmpiricalModel::updated: duplicate removal id " +
                            std::to_string(id));
    }
    rem_pos.push_back(it->second);
  }
  for (const LabeledSample& sample : batch.add) {
    check_input_dim(sample.x.size(), input_dim(), "EmpiricalModel::updated");
    if (pos_.count(sample.id) > 0 || (removed.count(sample.id) > 0)) {
      throw IndexOutOfRange("EmpiricalModel::updated: added id " +
                            std::to_string(sample.id) + " already present");
    }
  }
  {
    std::unordered_map<SampleId, int> dup;
    for (const LabeledSample& sample : batch.add) {
      if (++dup[sample.id] > 1) {
        throw IndexOutOfRange("EmpiricalModel::updated: duplicate added id " +
                              std::to_string(sample.id));
      }
    }
  }

  // Assemble the edited sample set in canonical order: survivors first
  // (original order), then additions.
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n - n_rem));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (removed.count(ids_[static_cast<std::size_t>(i)]) == 0) keep.push_back(i);
  }
  Eigen::MatrixXd x_new(input_dim(), n_new);
  Eigen::VectorXd y_new(n_new);
  std::vector<SampleId> ids_new;
  ids_new.reserve(static_cast<std::size_t>(n_new));
  {
    Eigen::Index at = 0;
    for (Eigen::Index i : keep) {
      x_new.col(at) = x_.col(i);
      y_new(at) = y_(i);
      ids_new.push_back(ids_[static_cast<std::size_t>(i)]);
      ++at;
    }
    for (const LabeledSample& sample : batch.add) {
      x_new.col(at) = sample.x;
      y_new(at) = sample.y;
      ids_new.push_back(sample.id);
      ++at;
    }
  }

  // Once removals reach half the model the survivor Schur complement stops
  // paying for itself; rebuild from the edited samples directly.
  if (n - n_rem < n_rem) {
    std::vector<LabeledSample> edited;
    edited.reserve(static_cast<std::size_t>(n_new));
    for (Eigen::Index i = 0; i < n_new; ++i) {
      edited.push_back({ids_new[static_cast<std::size_t>(i)], x_new.col(i), y_new(i)});
    }
    return fit(edited, spec_, ridge_);
  }

  const Eigen::Index n_keep = n - n_rem;
  std::optional<SymMatrix> pruned;
  if (n_rem > 0) pruned = block_inverse_remove(q_inv_, rem_pos);

  std::optional<SymMatrix> q_inv_next;
  std::optional<SymMatrix> q_next;
  if (n_add > 0) {
    const auto survivors = x_new.leftCols(n_keep);
    const auto added = x_new.rightCols(n_add);
    const Eigen::MatrixXd eta = kernel_cross(spec_, survivors, added);
    Eigen::MatrixXd corner_raw = kernel_cross(spec_, added, added);
    corner_raw.diagonal().array() += ridge_;
    const SymMatrix corner(corner_raw);

    q_inv_next = block_inverse_append(pruned ? *pruned : q_inv_, eta, corner);

    Eigen::MatrixXd q_raw(n_new, n_new);
    if (n_rem > 0) {
      q_raw.topLeftCorner(n_keep, n_keep) = q_.mat()(keep, keep);
    } else {
      q_raw.topLeftCorner(n_keep, n_keep) = q_.mat();
    }
    q_raw.topRightCorner(n_keep, n_add) = eta;
    q_raw.bottomLeftCorner(n_add, n_keep) = eta.transpose();
    q_raw.bottomRightCorner(n_add, n_add) = corner.mat();
    q_next = SymMatrix::adopt_symmetric(std::move(q_raw));
  } else if (n_rem > 0) {
    q_next = SymMatrix::adopt_symmetric(q_.mat()(keep, keep));
    q_inv_next = std::move(pruned);
  } else {
    q_inv_next = q_inv_;
    q_next = q_;
  }

  EmpiricalModel next(spec_, ridge_, std::move(*q_next), std::move(*q_inv_next));
  next.x_ = std::move(x_new);
  next.y_ = std::move(y_new);
  next.ids_ = std::move(ids_new);
  next.rounds_since_refresh_ = rounds_since_refresh_;
  next.rebuild_index();
  next.solve_dual();
  next.maybe_refresh();
  return next;
}

double EmpiricalModel::predict(const Eigen::VectorXd& x) const {
  check_input_dim(x.size(), input_dim(), "EmpiricalModel::predict");
  const Eigen::MatrixXd k = kernel_cross(spec_, x_, x);
  return a_.dot(k.col(0)) + b_;
}

int EmpiricalModel::classify(const Eigen::VectorXd& x, double threshold) const {
  return predict(x) >= threshold ? 1 : -1;
}

EmpiricalModel EmpiricalModel::restore(KernelSpec spec, double ridge,
                                       SymMatrix q_inv, Eigen::VectorXd a,
                                       double b, std::vector<SampleId> ids,
                                       Eigen::MatrixXd x, Eigen::VectorXd y) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (q_inv.order() != n || a.size() != n || x.cols() != n || y.size() != n ||
      n < 1) {
    throw DimensionMismatch("EmpiricalModel::restore: inconsistent field shapes");
  }
  // The kernel cache is not part of the serialized surface; rebuild it from
  // the stored samples.
  Eigen::MatrixXd q_raw = kernel_cross(spec, x, x);
  q_raw.diagonal().array() += ridge;
  EmpiricalModel model(spec, ridge, SymMatrix(q_raw), std::move(q_inv));
  model.a_ = std::move(a);
  model.b_ = b;
  model.x_ = std::move(x);
  model.y_ = std::move(y);
  model.ids_ = std::move(ids);
  model.rebuild_index();
  if (model.pos_.size() != model.ids_.size()) {
    throw IndexOutOfRange("EmpiricalModel::restore: duplicate sample ids");
  }
  return model;
}

BatchAdvice batch_guard(const EmpiricalModel& model, const EditBatch& batch) {
  const auto n_rem = static_cast<Eigen::Index>(batch.remove.size());
  return model.sample_count() - n_rem < n_rem ? BatchAdvice::AdviseRefit
                                              : BatchAdvice::Proceed;
}

}  // namespace krr
