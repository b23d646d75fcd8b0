#include "krrstream/stream.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include <json.hpp>

#include "krrstream/krr_empirical.hpp"
#include "krrstream/krr_intrinsic.hpp"

namespace krr {

namespace {

using nlohmann::json;

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  // Unbiased rejection sampling on the raw 64-bit stream.
  const std::uint64_t rej =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = rng();
  while (v >= rej) v = rng();
  return v % n;
}

double rel_gap(const Eigen::VectorXd& value, const Eigen::VectorXd& reference) {
  if (value.size() != reference.size()) {
    return std::numeric_limits<double>::infinity();
  }
  const double ref_scale =
      reference.size() == 0 ? 0.0 : reference.cwiseAbs().maxCoeff();
  const double gap =
      value.size() == 0 ? 0.0 : (value - reference).cwiseAbs().maxCoeff();
  return gap / (1.0 + ref_scale);
}

double rel_gap(double value, double reference) {
  return std::abs(value - reference) / (1.0 + std::abs(reference));
}

double rel_gap(const Eigen::MatrixXd& value, const Eigen::MatrixXd& reference) {
  if (value.rows() != reference.rows() || value.cols() != reference.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  return (value - reference).cwiseAbs().maxCoeff() /
         (1.0 + reference.cwiseAbs().maxCoeff());
}

struct IntrinsicTraits {
  using Model = IntrinsicModel;
  static Model fit(const std::vector<LabeledSample>& samples,
                   const ModelConfig& config) {
    return Model::fit(samples, config.spec, config.ridge);
  }
  static double predict(const Model& model, const Eigen::VectorXd& x) {
    return model.predict(x);
  }
  static double deviation(const Model& model, const Model& reference) {
    return std::max(rel_gap(model.weights(), reference.weights()),
                    rel_gap(model.bias(), reference.bias()));
  }
};

struct EmpiricalTraits {
  using Model = EmpiricalModel;
  static Model fit(const std::vector<LabeledSample>& samples,
                   const ModelConfig& config) {
    return Model::fit(samples, config.spec, config.ridge);
  }
  static double predict(const Model& model, const Eigen::VectorXd& x) {
    return model.predict(x);
  }
  static double deviation(const Model& model, const Model& reference) {
    return std::max(rel_gap(model.dual_coefficients(), reference.dual_coefficients()),
                    rel_gap(model.bias(), reference.bias()));
  }
};

struct BayesTraits {
  using Model = BayesPosterior;
  static Model fit(const std::vector<LabeledSample>& samples,
                   const ModelConfig& config) {
    return Model::fit(samples, config.spec, config.prior);
  }
  static double predict(const Model& model, const Eigen::VectorXd& x) {
    return model.predict_distribution(x).mean;
  }
  static double deviation(const Model& model, const Model& reference) {
    return std::max(rel_gap(model.mean(), reference.mean()),
                    rel_gap(model.covariance().mat(), reference.covariance().mat()));
  }
};

struct SplitPlan {
  std::vector<LabeledSample> test;
  std::vector<LabeledSample> initial;
  std::vector<LabeledSample> pool;  // consumed front to back
};

SplitPlan make_split(const Dataset& data, const StreamPlan& plan,
                     std::mt19937_64& rng) {
  if (!(plan.train_fraction > 0.0 && plan.train_fraction <= 1.0)) {
    throw Error("run_stream: train fraction must lie in (0, 1]");
  }
  if (plan.rounds < 0 || plan.adds_per_round < 0 || plan.removes_per_round < 0) {
    throw Error("run_stream: rounds and edit counts must be non-negative");
  }
  const auto n = static_cast<Eigen::Index>(data.samples.size());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        bounded_draw(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  const auto test_count = static_cast<Eigen::Index>(
      std::llround((1.0 - plan.train_fraction) * static_cast<double>(n)));
  const Eigen::Index pool_count =
      static_cast<Eigen::Index>(plan.rounds) * plan.adds_per_round;
  const Eigen::Index initial_count = n - test_count - pool_count;
  if (initial_count < 1) {
    throw PlanExhausted("run_stream: dataset of " + std::to_string(n) +
                        " cannot supply " + std::to_string(test_count) +
                        " test samples plus an arrival pool of " +
                        std::to_string(pool_count));
  }

  SplitPlan split;
  split.test.reserve(static_cast<std::size_t>(test_count));
  split.initial.reserve(static_cast<std::size_t>(initial_count));
  split.pool.reserve(static_cast<std::size_t>(pool_count));
  for (Eigen::Index i = 0; i < n; ++i) {
    const LabeledSample& sample =
        data.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    if (i < test_count) {
      split.test.push_back(sample);
    } else if (i < test_count + initial_count) {
      split.initial.push_back(sample);
    } else {
      split.pool.push_back(sample);
    }
  }
  return split;
}

struct RoundOutcome {
  double seconds = 0.0;
  std::vector<int> signs;
  double accuracy = 0.0;
};

template <typename Traits>
class StreamRunner {
 public:
  using Model = typename Traits::Model;

  StreamRunner(const Dataset& data, const StreamPlan& plan,
               const ModelConfig& config)
      : plan_(plan), config_(config), rng_(plan.seed) {
    split_ = make_split(data, plan, rng_);
    members_ = split_.initial;
  }

  std::vector<RoundReport> run() {
    const bool want_batch =
        plan_.strategy == Strategy::Batch || plan_.strategy == Strategy::All;
    const bool want_single =
        plan_.strategy == Strategy::Single || plan_.strategy == Strategy::All;
    const bool want_refit =
        plan_.strategy == Strategy::Refit || plan_.strategy == Strategy::All;

    Model oracle = Traits::fit(members_, config_);
    std::optional<Model> batch_chain;
    std::optional<Model> single_chain;
    if (want_batch) batch_chain = oracle;
    if (want_single) single_chain = oracle;

    std::vector<RoundReport> reports;
    reports.reserve(static_cast<std::size_t>(plan_.rounds));
    double batch_cum = 0.0;
    double single_cum = 0.0;
    double refit_cum = 0.0;
    std::size_t pool_at = 0;

    for (int round = 1; round <= plan_.rounds; ++round) {
      try {
        const EditBatch batch = next_batch(pool_at);
        apply_edits_to_members(batch);

        RoundReport report;
        report.round = round;
        report.sample_count = static_cast<Eigen::Index>(members_.size());

        // Refit oracle always runs; it anchors the deviation metric.
        const auto refit_start = std::chrono::steady_clock::now();
        oracle = Traits::fit(members_, config_);
        const double refit_seconds = elapsed_since(refit_start);
        if (want_refit) {
          refit_cum += refit_seconds;
          report.refit = score(oracle, refit_seconds, refit_cum);
        }

        if (batch_chain) {
          const auto start = std::chrono::steady_clock::now();
          *batch_chain = batch_chain->updated(batch);
          const double seconds = elapsed_since(start);
          batch_cum += seconds;
          report.batch = score(*batch_chain, seconds, batch_cum);
          report.deviation =
              std::max(report.deviation, Traits::deviation(*batch_chain, oracle));
        }

        if (single_chain) {
          const auto start = std::chrono::steady_clock::now();
          if (batch.empty()) {
            *single_chain = single_chain->updated(EditBatch{});
          } else {
            for (const LabeledSample& sample : batch.add) {
              EditBatch one;
              one.add.push_back(sample);
              *single_chain = single_chain->updated(one);
            }
            for (SampleId id : batch.remove) {
              EditBatch one;
              one.remove.push_back(id);
              *single_chain = single_chain->updated(one);
            }
          }
          const double seconds = elapsed_since(start);
          single_cum += seconds;
          report.single = score(*single_chain, seconds, single_cum);
          report.deviation =
              std::max(report.deviation, Traits::deviation(*single_chain, oracle));
        }

        report.sign_parity =
            signs_agree(oracle, batch_chain, single_chain, want_refit);
        reports.push_back(std::move(report));
      } catch (const StreamRoundError&) {
        throw;
      } catch (const Error& e) {
        throw StreamRoundError(round, e.what());
      }
    }
    return reports;
  }

 private:
  static double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }

  EditBatch next_batch(std::size_t& pool_at) {
    EditBatch batch;
    for (int i = 0; i < plan_.adds_per_round; ++i) {
      if (pool_at >= split_.pool.size()) {
        throw PlanExhausted("arrival pool exhausted");
      }
      batch.add.push_back(split_.pool[pool_at++]);
    }
    if (static_cast<std::size_t>(plan_.removes_per_round) > members_.size()) {
      throw PlanExhausted("fewer members than requested removals");
    }
    std::vector<std::size_t> candidates(members_.size());
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    for (int i = 0; i < plan_.removes_per_round; ++i) {
      const auto pick = static_cast<std::size_t>(
          bounded_draw(rng_, static_cast<std::uint64_t>(candidates.size())));
      batch.remove.push_back(members_[candidates[pick]].id);
      candidates[pick] = candidates.back();
      candidates.pop_back();
    }
    return batch;
  }

  void apply_edits_to_members(const EditBatch& batch) {
    // Mirror the models' canonical ordering: survivors keep their relative
    // order, additions append.
    if (!batch.remove.empty()) {
      std::vector<SampleId> removed(batch.remove);
      std::sort(removed.begin(), removed.end());
      auto is_removed = [&removed](SampleId id) {
        return std::binary_search(removed.begin(), removed.end(), id);
      };
      members_.erase(std::remove_if(members_.begin(), members_.end(),
                                    [&](const LabeledSample& s) {
                                      return is_removed(s.id);
                                    }),
                     members_.end());
    }
    members_.insert(members_.end(), batch.add.begin(), batch.add.end());
  }

  StrategyRound score(const Model& model, double seconds, double cumulative) const {
    StrategyRound out;
    out.seconds = seconds;
    out.log10_cumulative = std::log10(std::max(cumulative, 1e-300));
    if (split_.test.empty()) {
      out.accuracy = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    Eigen::Index hits = 0;
    for (const LabeledSample& sample : split_.test) {
      const int sign = Traits::predict(model, sample.x) >= 0.0 ? 1 : -1;
      const int truth = sample.y >= 0.0 ? 1 : -1;
      if (sign == truth) ++hits;
    }
    out.accuracy = static_cast<double>(hits) /
                   static_cast<double>(split_.test.size());
    return out;
  }

  std::vector<int> test_signs(const Model& model) const {
    std::vector<int> signs;
    signs.reserve(split_.test.size());
    for (const LabeledSample& sample : split_.test) {
      signs.push_back(Traits::predict(model, sample.x) >= 0.0 ? 1 : -1);
    }
    return signs;
  }

  bool signs_agree(const Model& oracle, const std::optional<Model>& batch_chain,
                   const std::optional<Model>& single_chain,
                   bool want_refit) const {
    std::vector<std::vector<int>> all;
    if (batch_chain) all.push_back(test_signs(*batch_chain));
    if (single_chain) all.push_back(test_signs(*single_chain));
    if (want_refit) all.push_back(test_signs(oracle));
    for (std::size_t i = 1; i < all.size(); ++i) {
      if (all[i] != all[0]) return false;
    }
    return true;
  }

  StreamPlan plan_;
  ModelConfig config_;
  std::mt19937_64 rng_;
  SplitPlan split_;
  std::vector<LabeledSample> members_;
};

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json strategy_to_json(const std::optional<StrategyRound>& entry) {
  if (!entry) return nullptr;
  json out;
  out["seconds"] = entry->seconds;
  out["log10_cumulative"] = entry->log10_cumulative;
  if (std::isnan(entry->accuracy)) {
    out["accuracy"] = nullptr;
  } else {
    out["accuracy"] = entry->accuracy;
  }
  return out;
}

struct Summary {
  std::optional<double> mean_batch;
  std::optional<double> mean_single;
  std::optional<double> mean_refit;
  std::optional<double> improvement_fold;
};

Summary summarize(const std::vector<RoundReport>& rounds) {
  auto mean_of = [&rounds](const std::optional<StrategyRound> RoundReport::*field)
      -> std::optional<double> {
    double total = 0.0;
    std::size_t count = 0;
    for (const RoundReport& r : rounds) {
      if (r.*field) {
        total += (r.*field)->seconds;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return total / static_cast<double>(count);
  };
  Summary out;
  out.mean_batch = mean_of(&RoundReport::batch);
  out.mean_single = mean_of(&RoundReport::single);
  out.mean_refit = mean_of(&RoundReport::refit);
  if (out.mean_batch && out.mean_single && *out.mean_batch > 0.0) {
    out.improvement_fold = *out.mean_single / *out.mean_batch;
  }
  return out;
}

std::string render_json(const std::vector<RoundReport>& rounds) {
  json out;
  out["rounds"] = json::array();
  for (const RoundReport& r : rounds) {
    json row;
    row["round"] = r.round;
    row["n"] = r.sample_count;
    row["batch"] = strategy_to_json(r.batch);
    row["single"] = strategy_to_json(r.single);
    row["refit"] = strategy_to_json(r.refit);
    row["deviation"] = r.deviation;
    row["sign_parity"] = r.sign_parity;
    out["rounds"].push_back(std::move(row));
  }
  const Summary s = summarize(rounds);
  json mean;
  mean["batch"] = s.mean_batch ? json(*s.mean_batch) : json(nullptr);
  mean["single"] = s.mean_single ? json(*s.mean_single) : json(nullptr);
  mean["refit"] = s.mean_refit ? json(*s.mean_refit) : json(nullptr);
  out["summary"]["rounds"] = rounds.size();
  out["summary"]["mean_seconds"] = std::move(mean);
  out["summary"]["improvement_fold"] =
      s.improvement_fold ? json(*s.improvement_fold) : json(nullptr);
  return out.dump(2);
}

std::string render_csv(const std::vector<RoundReport>& rounds) {
  std::string out =
      "round,n,batch_seconds,single_seconds,refit_seconds,"
      "batch_log10_cum,single_log10_cum,refit_log10_cum,deviation,"
      "batch_accuracy,single_accuracy,refit_accuracy,sign_parity,"
      "improvement_fold\n";
  auto cell_seconds = [](const std::optional<StrategyRound>& e) {
    return e ? format_double(e->seconds) : std::string();
  };
  auto cell_log = [](const std::optional<StrategyRound>& e) {
    return e ? format_double(e->log10_cumulative) : std::string();
  };
  auto cell_acc = [](const std::optional<StrategyRound>& e) {
    return e && !std::isnan(e->accuracy) ? format_double(e->accuracy)
                                         : std::string();
  };
  for (const RoundReport& r : rounds) {
    out += std::to_string(r.round) + ',' + std::to_string(r.sample_count) + ',';
    out += cell_seconds(r.batch) + ',' + cell_seconds(r.single) + ',' +
           cell_seconds(r.refit) + ',';
    out += cell_log(r.batch) + ',' + cell_log(r.single) + ',' +
           cell_log(r.refit) + ',';
    out += format_double(r.deviation) + ',';
    out += cell_acc(r.batch) + ',' + cell_acc(r.single) + ',' +
           cell_acc(r.refit) + ',';
    out += r.sign_parity ? "true" : "false";
    out += ",\n";  // fold column only carries the summary row
  }
  const Summary s = summarize(rounds);
  auto opt_cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  out += "summary,,";
  out += opt_cell(s.mean_batch) + ',' + opt_cell(s.mean_single) + ',' +
         opt_cell(s.mean_refit) + ",,,,,,,,,";
  out += opt_cell(s.improvement_fold) + '\n';
  return out;
}

}  // namespace

std::vector<RoundReport> run_stream(const Dataset& data, const StreamPlan& plan,
                                    const ModelConfig& config) {
  switch (plan.space) {
    case Space::Intrinsic:
      return StreamRunner<IntrinsicTraits>(data, plan, config).run();
    case Space::Empirical:
      return StreamRunner<EmpiricalTraits>(data, plan, config).run();
    case Space::Bayes:
      return StreamRunner<BayesTraits>(data, plan, config).run();
  }
  throw Error("run_stream: unknown space");
}

std::string render_report(const std::vector<RoundReport>& rounds,
                          ReportFormat format) {
  if (rounds.empty()) {
    throw Error("render_report: no rounds to report");
  }
  return format == ReportFormat::Json ? render_json(rounds) : render_csv(rounds);
}

}  // namespace krr
