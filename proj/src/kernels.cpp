#include "krrstream/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace krr {

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    std::uint64_t t = 0;
    if (__builtin_mul_overflow(acc, n - k + i, &t)) {
      throw Error("binomial coefficient overflows 64-bit range");
    }
    acc = t / i;  // exact: the running value is C(n-k+i, i)
  }
  return acc;
}

/// Exponent rows and sqrt-multinomial scalings of every monomial with total
/// degree <= degree over input_dim coordinates, in graded order (degree
/// ascending, earlier coordinates dominating within a degree). Exponents are
/// kept sparsely as (coordinate, power) pairs.
struct FeatureTable {
  std::vector<std::vector<std::pair<Eigen::Index, int>>> terms;
  Eigen::VectorXd coeffs;
};

std::uint64_t multinomial(const std::vector<int>& parts) {
  // (sum parts)! / prod(parts_i!), expanded as a product of binomials over
  // the running sum so every intermediate stays integral.
  std::uint64_t acc = 1;
  std::uint64_t used = 0;
  for (int p : parts) {
    used += static_cast<std::uint64_t>(p);
    std::uint64_t t = 0;
    if (__builtin_mul_overflow(acc, binomial(used, static_cast<std::uint64_t>(p)),
                               &t)) {
      throw Error("multinomial coefficient overflows 64-bit range");
    }
    acc = t;
  }
  return acc;
}

FeatureTable build_feature_table(int degree, Eigen::Index input_dim) {
  FeatureTable table;
  std::vector<double> coeffs;
  std::vector<int> alpha(static_cast<std::size_t>(input_dim), 0);

  auto emit = [&] {
    std::vector<std::pair<Eigen::Index, int>> sparse;
    std::vector<int> parts;
    int total_used = 0;
    for (Eigen::Index i = 0; i < input_dim; ++i) {
      const int e = alpha[static_cast<std::size_t>(i)];
      if (e > 0) {
        sparse.emplace_back(i, e);
        parts.push_back(e);
        total_used += e;
      }
    }
    // The slack degree - |alpha| is absorbed by the constant slot of
    // (1 + x.z)^degree, so the coefficient is the full multinomial over
    // {degree - |alpha|, alpha_1, ..., alpha_M}.
    parts.push_back(degree - total_used);
    table.terms.push_back(std::move(sparse));
    coeffs.push_back(std::sqrt(static_cast<double>(multinomial(parts))));
  };

  auto recurse = [&](auto&& self, Eigen::Index pos, int remaining) -> void {
    if (pos == input_dim - 1) {
      alpha[static_cast<std::size_t>(pos)] = remaining;
      emit();
      alpha[static_cast<std::size_t>(pos)] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      alpha[static_cast<std::size_t>(pos)] = e;
      self(self, pos + 1, remaining - e);
    }
    alpha[static_cast<std::size_t>(pos)] = 0;
  };

  for (int g = 0; g <= degree; ++g) {
    if (input_dim == 0) {
      if (g == 0) emit();
      continue;
    }
    recurse(recurse, 0, g);
  }
  table.coeffs = Eigen::Map<const Eigen::VectorXd>(
      coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return table;
}

void map_column(const FeatureTable& table, const Eigen::MatrixXd& powers,
                Eigen::Ref<Eigen::VectorXd> out) {
  for (Eigen::Index j = 0; j < table.coeffs.size(); ++j) {
    double mono = 1.0;
    for (const auto& [coord, e] : table.terms[static_cast<std::size_t>(j)]) {
      mono *= powers(coord, e);
    }
    out(j) = table.coeffs(j) * mono;
  }
}

/// Per-coordinate power table x_i^e for e = 0..degree of one sample.
Eigen::MatrixXd coordinate_powers(const Eigen::VectorXd& x, int degree) {
  Eigen::MatrixXd powers(x.size(), degree + 1);
  powers.col(0).setOnes();
  for (int e = 1; e <= degree; ++e) {
    powers.col(e) = powers.col(e - 1).cwiseProduct(x);
  }
  return powers;
}

double ipow(double base, int e) {
  double acc = 1.0;
  for (int i = 0; i < e; ++i) acc *= base;
  return acc;
}

}  // namespace

KernelSpec KernelSpec::polynomial(int degree) {
  if (degree < 1) {
    throw Error("KernelSpec: polynomial degree must be >= 1, got " +
                std::to_string(degree));
  }
  return KernelSpec(KernelFamily::Polynomial, degree, 0.0);
}

KernelSpec KernelSpec::rbf(double radius) {
  if (!(radius > 0.0)) {
    throw Error("KernelSpec: rbf radius must be positive");
  }
  return KernelSpec(KernelFamily::RBF, 0, radius);
}

int KernelSpec::degree() const {
  if (family_ != KernelFamily::Polynomial) {
    throw UnsupportedKernel("degree() is only defined for polynomial kernels");
  }
  return degree_;
}

double KernelSpec::radius() const {
  if (family_ != KernelFamily::RBF) {
    throw UnsupportedKernel("radius() is only defined for rbf kernels");
  }
  return radius_;
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& z) {
  if (x.size() != z.size()) {
    throw DimensionMismatch("kernel_eval: operand lengths " +
                            std::to_string(x.size()) + " and " +
                            std::to_string(z.size()) + " differ");
  }
  switch (spec.family()) {
    case KernelFamily::Polynomial:
      return ipow(1.0 + x.dot(z), spec.degree());
    case KernelFamily::RBF: {
      const double r = spec.radius();
      return std::exp(-(x - z).squaredNorm() / (2.0 * r * r));
    }
  }
  throw UnsupportedKernel("kernel_eval: unknown kernel family");
}

Eigen::VectorXd feature_map(const KernelSpec& spec, const Eigen::VectorXd& x) {
  if (!spec.has_feature_map()) {
    throw UnsupportedKernel("feature_map: kernel family has no finite feature map");
  }
  const FeatureTable table = build_feature_table(spec.degree(), x.size());
  Eigen::VectorXd out(table.coeffs.size());
  map_column(table, coordinate_powers(x, spec.degree()), out);
  return out;
}

Eigen::Index intrinsic_dim(const KernelSpec& spec, Eigen::Index input_dim) {
  if (!spec.has_feature_map()) {
    throw UnsupportedKernel("intrinsic_dim: kernel family has no finite feature map");
  }
  if (input_dim < 1) {
    throw DimensionMismatch("intrinsic_dim: input dimension must be >= 1");
  }
  const std::uint64_t dim =
      binomial(static_cast<std::uint64_t>(input_dim) +
                   static_cast<std::uint64_t>(spec.degree()),
               static_cast<std::uint64_t>(spec.degree()));
  if (dim > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw Error("intrinsic_dim: feature count overflows index range");
  }
  return static_cast<Eigen::Index>(dim);
}

Eigen::MatrixXd feature_matrix(const KernelSpec& spec,
                               const Eigen::MatrixXd& samples) {
  if (!spec.has_feature_map()) {
    throw UnsupportedKernel("feature_matrix: kernel family has no finite feature map");
  }
  const int degree = spec.degree();
  const FeatureTable table = build_feature_table(degree, samples.rows());
  Eigen::MatrixXd out(table.coeffs.size(), samples.cols());
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    map_column(table, coordinate_powers(samples.col(c), degree), out.col(c));
  }
  return out;
}

Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& lhs,
                             const Eigen::MatrixXd& rhs) {
  if (lhs.rows() != rhs.rows()) {
    throw DimensionMismatch("kernel_cross: sample dimensions " +
                            std::to_string(lhs.rows()) + " and " +
                            std::to_string(rhs.rows()) + " differ");
  }
  Eigen::MatrixXd gram = lhs.transpose() * rhs;
  switch (spec.family()) {
    case KernelFamily::Polynomial: {
      const int degree = spec.degree();
      const Eigen::ArrayXXd base = 1.0 + gram.array();
      Eigen::ArrayXXd acc = Eigen::ArrayXXd::Ones(gram.rows(), gram.cols());
      for (int e = 0; e < degree; ++e) acc *= base;
      return acc.matrix();
    }
    case KernelFamily::RBF: {
      const double r = spec.radius();
      const Eigen::VectorXd lhs_sq = lhs.colwise().squaredNorm();
      const Eigen::VectorXd rhs_sq = rhs.colwise().squaredNorm();
      Eigen::ArrayXXd dist2 = (-2.0 * gram).array();
      dist2.colwise() += lhs_sq.array();
      dist2.rowwise() += rhs_sq.transpose().array();
      return (-dist2.cwiseMax(0.0) / (2.0 * r * r)).exp().matrix();
    }
  }
  throw UnsupportedKernel("kernel_cross: unknown kernel family");
}

}  // namespace krr
