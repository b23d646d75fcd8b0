#include <doctest.h>

#include <cmath>
#include <random>

#include "krrstream/kernels.hpp"
#include "support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using krr::KernelSpec;
using test_support::exact_eq;
using test_support::random_matrix;
using test_support::random_vector;

namespace {

// Independent count of monomials with total degree <= degree over dim
// coordinates.
long count_monomials(int dim, int degree) {
  if (dim == 0) return 1;
  long total = 0;
  for (int e = 0; e <= degree; ++e) total += count_monomials(dim - 1, degree - e);
  return total;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("KernelSpec validates its parameters") {
  CHECK_THROWS_AS(KernelSpec::polynomial(0), krr::Error);
  CHECK_THROWS_AS(KernelSpec::rbf(0.0), krr::Error);
  CHECK_THROWS_AS(KernelSpec::rbf(-1.0), krr::Error);
  CHECK_THROWS_AS(KernelSpec::polynomial(2).radius(), krr::UnsupportedKernel);
  CHECK_THROWS_AS(KernelSpec::rbf(1.0).degree(), krr::UnsupportedKernel);
  CHECK(KernelSpec::polynomial(3).has_feature_map());
  CHECK_FALSE(KernelSpec::rbf(50.0).has_feature_map());
}

TEST_CASE("kernel_eval computes the closed forms") {
  VectorXd x(2);
  x << 1.0, 2.0;
  VectorXd z(2);
  z << 3.0, -1.0;
  CHECK_EQ(krr::kernel_eval(KernelSpec::polynomial(2), x, z), 4.0);
  CHECK_EQ(krr::kernel_eval(KernelSpec::polynomial(3), x, z), 8.0);

  VectorXd origin = VectorXd::Zero(2);
  VectorXd far(2);
  far << 3.0, 4.0;
  CHECK_EQ(krr::kernel_eval(KernelSpec::rbf(5.0), origin, origin), 1.0);
  CHECK_EQ(krr::kernel_eval(KernelSpec::rbf(5.0), origin, far), std::exp(-0.5));

  CHECK_THROWS_AS(krr::kernel_eval(KernelSpec::polynomial(2), x, VectorXd::Zero(3)),
                  krr::DimensionMismatch);
}

TEST_CASE("feature_map is graded with multinomial scalings") {
  VectorXd x(2);
  x << 2.0, 3.0;
  const VectorXd phi = krr::feature_map(KernelSpec::polynomial(2), x);
  REQUIRE_EQ(phi.size(), 6);
  const double r2 = std::sqrt(2.0);
  CHECK_EQ(phi(0), 1.0);
  CHECK_EQ(phi(1), r2 * 2.0);
  CHECK_EQ(phi(2), r2 * 3.0);
  CHECK_EQ(phi(3), 4.0);
  CHECK_EQ(phi(4), r2 * 2.0 * 3.0);
  CHECK_EQ(phi(5), 9.0);
}

TEST_CASE("feature_map reproduces the kernel value") {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(rng() % 8);
    const int degree = 1 + static_cast<int>(rng() % 4);
    const KernelSpec spec = KernelSpec::polynomial(degree);
    const VectorXd x = random_vector(rng, dim);
    const VectorXd z = random_vector(rng, dim);
    const double via_features =
        krr::feature_map(spec, x).dot(krr::feature_map(spec, z));
    const double direct = krr::kernel_eval(spec, x, z);
    CHECK_LT(std::abs(via_features - direct) / (1.0 + std::abs(direct)), 1e-9);
  }
}

TEST_CASE("intrinsic_dim counts the feature space") {
  CHECK_EQ(krr::intrinsic_dim(KernelSpec::polynomial(2), 2), 6);
  CHECK_EQ(krr::intrinsic_dim(KernelSpec::polynomial(2), 21), 253);
  CHECK_EQ(krr::intrinsic_dim(KernelSpec::polynomial(3), 21), 2024);
  // C(1000002, 2) = 1000002 * 1000001 / 2.
  CHECK_EQ(krr::intrinsic_dim(KernelSpec::polynomial(2), 1000000),
           500001500001LL);

  for (int dim = 1; dim <= 6; ++dim) {
    for (int degree = 1; degree <= 4; ++degree) {
      const KernelSpec spec = KernelSpec::polynomial(degree);
      const long expected = count_monomials(dim, degree);
      CHECK_EQ(krr::intrinsic_dim(spec, dim), expected);
      CHECK_EQ(krr::feature_map(spec, VectorXd::Zero(dim)).size(), expected);
    }
  }

  CHECK_THROWS_AS(krr::intrinsic_dim(KernelSpec::rbf(1.0), 4),
                  krr::UnsupportedKernel);
  CHECK_THROWS_AS(krr::feature_map(KernelSpec::rbf(1.0), VectorXd::Zero(2)),
                  krr::UnsupportedKernel);
}

TEST_CASE("feature_matrix maps every column like feature_map") {
  std::mt19937_64 rng(808);
  const KernelSpec spec = KernelSpec::polynomial(3);
  const MatrixXd samples = random_matrix(rng, 4, 9);
  const MatrixXd phi = krr::feature_matrix(spec, samples);
  REQUIRE_EQ(phi.rows(), krr::intrinsic_dim(spec, 4));
  REQUIRE_EQ(phi.cols(), 9);
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    CHECK(exact_eq(phi.col(c), krr::feature_map(spec, samples.col(c))));
  }
}

TEST_CASE("kernel_cross agrees with pairwise kernel_eval") {
  std::mt19937_64 rng(909);
  const MatrixXd lhs = random_matrix(rng, 5, 7);
  const MatrixXd rhs = random_matrix(rng, 5, 4);
  for (const KernelSpec& spec :
       {KernelSpec::polynomial(2), KernelSpec::polynomial(3), KernelSpec::rbf(2.5)}) {
    const MatrixXd cross = krr::kernel_cross(spec, lhs, rhs);
    REQUIRE_EQ(cross.rows(), 7);
    REQUIRE_EQ(cross.cols(), 4);
    for (Eigen::Index i = 0; i < cross.rows(); ++i) {
      for (Eigen::Index j = 0; j < cross.cols(); ++j) {
        const double direct = krr::kernel_eval(spec, lhs.col(i), rhs.col(j));
        CHECK_LT(std::abs(cross(i, j) - direct) / (1.0 + std::abs(direct)), 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(krr::kernel_cross(KernelSpec::polynomial(2), lhs,
                                    MatrixXd::Zero(4, 4)),
                  krr::DimensionMismatch);
}

}  // TEST_SUITE
