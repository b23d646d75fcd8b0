#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "krrstream/errors.hpp"

namespace krr {

enum class KernelFamily { Polynomial, RBF };

/// Value type naming a kernel: inhomogeneous polynomial (1 + x.z)^degree or
/// Gaussian exp(-|x - z|^2 / (2 radius^2)). Only the polynomial family has a
/// finite feature map.
class KernelSpec {
 public:
  static KernelSpec polynomial(int degree);
  static KernelSpec rbf(double radius);

  KernelFamily family() const { return family_; }
  int degree() const;
  double radius() const;
  bool has_feature_map() const { return family_ == KernelFamily::Polynomial; }

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelSpec(KernelFamily family, int degree, double radius)
      : family_(family), degree_(degree), radius_(radius) {}

  KernelFamily family_;
  int degree_;
  double radius_;
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& z);

/// Explicit feature map of the polynomial kernel: one entry per monomial of
/// total degree <= degree, scaled by the square root of its multinomial
/// coefficient so that feature_map(x).dot(feature_map(z)) == kernel_eval(x, z).
/// Ordering is graded: degree ascending, and within a degree the exponent of
/// an earlier coordinate dominates (1, x1, x2, x1^2, x1 x2, x2^2, ...).
/// Throws UnsupportedKernel for families without a finite map.
Eigen::VectorXd feature_map(const KernelSpec& spec, const Eigen::VectorXd& x);

/// Length of feature_map for the given input dimension: C(input_dim + degree,
/// degree). Computed in integer arithmetic; throws on overflow.
Eigen::Index intrinsic_dim(const KernelSpec& spec, Eigen::Index input_dim);

/// feature_map applied to every column of samples (input_dim x n), giving the
/// J x n feature block with the enumeration table built once.
Eigen::MatrixXd feature_matrix(const KernelSpec& spec,
                               const Eigen::MatrixXd& samples);

/// Kernel matrix between two column-sample sets: out(i, j) =
/// kernel_eval(lhs.col(i), rhs.col(j)), evaluated blockwise through a single
/// Gram product so large refits stay matrix-multiply bound.
Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& lhs,
                             const Eigen::MatrixXd& rhs);

}  // namespace krr
