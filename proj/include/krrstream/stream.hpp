#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "krrstream/dataset.hpp"
#include "krrstream/kbr.hpp"
#include "krrstream/kernels.hpp"
#include "krrstream/sample.hpp"

namespace krr {

/// How an edit round is folded into the model. Batch applies the whole round
/// as one rank-k update, Single replays it one sample at a time (rank-1
/// steps), Refit rebuilds from scratch; All runs the three side by side.
enum class Strategy { Batch, Single, Refit, All };

enum class Space { Intrinsic, Empirical, Bayes };

struct StreamPlan {
  double train_fraction = 0.8;
  int rounds = 10;
  int adds_per_round = 4;
  int removes_per_round = 2;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::All;
  Space space = Space::Empirical;
};

/// Model hyperparameters shared by every strategy chain. The ridge applies
/// to the two KRR spaces, the prior to the Bayesian one.
struct ModelConfig {
  KernelSpec spec;
  double ridge = 0.5;
  BayesPrior prior{};
};

struct StrategyRound {
  double seconds = 0.0;
  double log10_cumulative = 0.0;
  double accuracy = 0.0;
};

struct RoundReport {
  int round = 0;
  Eigen::Index sample_count = 0;
  std::optional<StrategyRound> batch;
  std::optional<StrategyRound> single;
  std::optional<StrategyRound> refit;
  /// Worst relative parameter gap of the incremental chains against the
  /// refit oracle, max over blocks of |delta|_inf / (1 + |reference|_inf).
  double deviation = 0.0;
  /// All executed strategies produced identical sign vectors on the fixed
  /// held-out split.
  bool sign_parity = true;
};

/// Raised when a round fails; the message names the round and preserves the
/// underlying error text.
class StreamRoundError : public Error {
 public:
  StreamRoundError(int round, const std::string& what)
      : Error("round " + std::to_string(round) + ": " + what), round_(round) {}

  int round() const { return round_; }

 private:
  int round_;
};

/// Replays an edit stream over the dataset. The seeded shuffle fixes a
/// held-out test split of (1 - train_fraction) of the samples, reserves
/// rounds * adds_per_round samples as the arrival pool, and fits the initial
/// model on the rest. Each round draws removals uniformly from the current
/// membership, feeds the same edits to every selected strategy chain, times
/// the model operations only, and scores the chains on the fixed split. A
/// full refit always runs as the equivalence oracle; its timing is reported
/// when the plan selects it.
std::vector<RoundReport> run_stream(const Dataset& data, const StreamPlan& plan,
                                    const ModelConfig& config);

enum class ReportFormat { Json, Csv };

/// Renders round reports plus a summary (per-strategy mean seconds and the
/// Single/Batch improvement fold). CSV emits one header, one row per round
/// and one trailer row labeled "summary"; JSON mirrors the same fields.
std::string render_report(const std::vector<RoundReport>& rounds,
                          ReportFormat format);

}  // namespace krr
