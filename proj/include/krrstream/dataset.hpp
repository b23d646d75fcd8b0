#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "krrstream/errors.hpp"
#include "krrstream/sample.hpp"

namespace krr {

/// Labeled samples sharing one input dimension; ids are assigned
/// sequentially in file order (0, 1, ...).
struct Dataset {
  Eigen::Index dim = 0;
  std::vector<LabeledSample> samples;
};

enum class DataFormat { DenseCsv, SparseText };

/// Parses a dataset from a stream.
///
/// DenseCsv: one sample per line, "label,f1,f2,...,fM"; every line must
/// carry the same feature count. SparseText: "label idx:val idx:val ..."
/// with 1-based indices; the dimension is the largest index seen unless
/// dim_override pins it, and an index beyond the override raises
/// DimensionOverride. Malformed lines raise ParseError naming the line.
Dataset ingest(std::istream& in, DataFormat format,
               std::optional<Eigen::Index> dim_override = std::nullopt);

Dataset ingest_file(const std::string& path, DataFormat format,
                    std::optional<Eigen::Index> dim_override = std::nullopt);

/// Two-class Gaussian blobs with labels in {-1, +1}: class means sit at
/// -2 sigma and +2 sigma on the first coordinate (4 sigma separation) and
/// every coordinate carries N(0, sigma^2) noise. Fully determined by the
/// seed; the generator does not depend on library distribution internals.
Dataset synthesize(Eigen::Index n, Eigen::Index dim, double noise_sigma,
                   std::uint64_t seed);

}  // namespace krr
