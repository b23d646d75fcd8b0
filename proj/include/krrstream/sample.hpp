#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace krr {

/// Stable identifier a sample keeps for its whole lifetime in a model,
/// independent of the row it currently occupies.
using SampleId = std::int64_t;

struct LabeledSample {
  SampleId id = 0;
  Eigen::VectorXd x;
  double y = 0.0;
};

/// One edit round: samples entering the model and ids leaving it.
struct EditBatch {
  std::vector<LabeledSample> add;
  std::vector<SampleId> remove;

  bool empty() const { return add.empty() && remove.empty(); }
};

enum class BatchAdvice { Proceed, AdviseRefit };

}  // namespace krr
