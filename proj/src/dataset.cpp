#include "krrstream/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "krrstream/errors.hpp"

namespace krr {

namespace {

[[noreturn]] void parse_fail(long line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, long line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    parse_fail(line, "cannot parse number '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    parse_fail(line, "non-finite value '" + std::string(token) + "'");
  }
  return value;
}

long parse_index(std::string_view token, long line) {
  long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    parse_fail(line, "cannot parse feature index '" + std::string(token) + "'");
  }
  return value;
}

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

Dataset ingest_dense_csv(std::istream& in,
                         std::optional<Eigen::Index> dim_override) {
  Dataset out;
  std::string line;
  long line_no = 0;
  bool dim_known = dim_override.has_value();
  if (dim_known) out.dim = *dim_override;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trimmed(line);
    if (body.empty()) continue;

    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view token =
          trimmed(body.substr(start, comma == std::string_view::npos
                                         ? std::string_view::npos
                                         : comma - start));
      fields.push_back(parse_double(token, line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.empty()) parse_fail(line_no, "no label field");

    const auto m = static_cast<Eigen::Index>(fields.size()) - 1;
    if (!dim_known) {
      out.dim = m;
      dim_known = true;
    } else if (m != out.dim) {
      parse_fail(line_no, "expected " + std::to_string(out.dim) +
                              " features, found " + std::to_string(m));
    }

    LabeledSample sample;
    sample.id = static_cast<SampleId>(out.samples.size());
    sample.y = fields[0];
    sample.x = Eigen::Map<const Eigen::VectorXd>(fields.data() + 1, m);
    out.samples.push_back(std::move(sample));
  }
  return out;
}

Dataset ingest_sparse_text(std::istream& in,
                           std::optional<Eigen::Index> dim_override) {
  struct Row {
    double label;
    std::vector<std::pair<long, double>> entries;
  };
  std::vector<Row> rows;
  long max_index = 0;
  std::string line;
  long line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens{line};
    std::string token;
    if (!(tokens >> token)) continue;

    Row row;
    row.label = parse_double(token, line_no);
    while (tokens >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos) {
        parse_fail(line_no, "expected idx:val, found '" + token + "'");
      }
      const long idx = parse_index(std::string_view(token).substr(0, colon), line_no);
      const double val =
          parse_double(std::string_view(token).substr(colon + 1), line_no);
      if (idx < 1) parse_fail(line_no, "feature indices are 1-based");
      for (const auto& [seen, unused] : row.entries) {
        if (seen == idx) {
          parse_fail(line_no, "duplicate feature index " + std::to_string(idx));
        }
      }
      if (dim_override && idx > static_cast<long>(*dim_override)) {
        throw DimensionOverride(
            "line " + std::to_string(line_no) + ": feature index " +
            std::to_string(idx) + " exceeds declared dimension " +
            std::to_string(*dim_override));
      }
      max_index = std::max(max_index, idx);
      row.entries.emplace_back(idx, val);
    }
    rows.push_back(std::move(row));
  }

  Dataset out;
  out.dim = dim_override.value_or(static_cast<Eigen::Index>(max_index));
  out.samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LabeledSample sample;
    sample.id = static_cast<SampleId>(i);
    sample.y = rows[i].label;
    sample.x = Eigen::VectorXd::Zero(out.dim);
    for (const auto& [idx, val] : rows[i].entries) {
      sample.x(idx - 1) = val;
    }
    out.samples.push_back(std::move(sample));
  }
  return out;
}

}  // namespace

Dataset ingest(std::istream& in, DataFormat format,
               std::optional<Eigen::Index> dim_override) {
  Dataset out = format == DataFormat::DenseCsv
                    ? ingest_dense_csv(in, dim_override)
                    : ingest_sparse_text(in, dim_override);
  if (out.samples.empty()) {
    throw ParseError("no samples in input");
  }
  return out;
}

Dataset ingest_file(const std::string& path, DataFormat format,
                    std::optional<Eigen::Index> dim_override) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path + "'");
  }
  return ingest(in, format, dim_override);
}

Dataset synthesize(Eigen::Index n, Eigen::Index dim, double noise_sigma,
                   std::uint64_t seed) {
  if (n < 1 || dim < 1) {
    throw Error("synthesize: need n >= 1 and dim >= 1");
  }
  if (!(noise_sigma >= 0.0)) {
    throw Error("synthesize: noise sigma must be non-negative");
  }
  std::mt19937_64 rng(seed);

  auto unit_uniform = [&rng] {
    // 53 random mantissa bits mapped to (0, 1]; keeps the draw sequence
    // independent of standard-library distribution internals.
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  };
  bool have_spare = false;
  double spare = 0.0;
  auto unit_normal = [&]() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double angle = 2.0 * M_PI * unit_uniform();
    const double mag = std::sqrt(-2.0 * std::log(unit_uniform()));
    spare = mag * std::sin(angle);
    have_spare = true;
    return mag * std::cos(angle);
  };

  Dataset out;
  out.dim = dim;
  out.samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double label = (rng() >> 63) != 0 ? 1.0 : -1.0;
    LabeledSample sample;
    sample.id = static_cast<SampleId>(i);
    sample.y = label;
    sample.x.resize(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      sample.x(d) = noise_sigma * unit_normal();
    }
    sample.x(0) += 2.0 * noise_sigma * label;
    out.samples.push_back(std::move(sample));
  }
  return out;
}

}  // namespace krr
