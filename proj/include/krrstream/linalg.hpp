#pragma once

#include <vector>

#include <Eigen/Dense>

#include "krrstream/errors.hpp"

namespace krr {

/// Block of column vectors in the row space of a SymMatrix
/// (rows = space dimension, cols = block width; zero columns permitted).
using ColumnBlock = Eigen::MatrixXd;

/// Dense symmetric matrix with storage-enforced symmetry: the converting
/// constructor stores (m + m^T)/2, so m(i,j) == m(j,i) holds exactly and
/// update formulas never see drift between the two triangles.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(Eigen::Index order);

  /// Adopts a matrix that is symmetric by construction, skipping the
  /// symmetrizing pass. Callers are responsible for exact symmetry.
  static SymMatrix adopt_symmetric(Eigen::MatrixXd m);

  Eigen::Index order() const { return mat_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }
  const Eigen::MatrixXd& mat() const { return mat_; }

 private:
  SymMatrix() = default;

  Eigen::MatrixXd mat_;
};

enum class UpdateSign { Add = +1, Remove = -1 };

/// Sherman-Morrison step: given S^-1, returns (S + sign * v v^T)^-1.
/// Throws SingularPivot when the denominator 1 + sign * v^T S^-1 v is
/// singular to tolerance.
SymMatrix rank1_update(const SymMatrix& s_inv, const Eigen::VectorXd& v,
                       UpdateSign sign);

/// Woodbury step folding an append block and a remove block into one
/// correction: given S^-1, returns (S + A A^T - R R^T)^-1 at cost
/// O(order^2 * k + k^3) with k = cols(A) + cols(R). A single-column edit
/// degenerates to rank1_update; two empty blocks return the input.
SymMatrix rankk_update(const SymMatrix& s_inv, const ColumnBlock& add,
                       const ColumnBlock& remove);

/// Bordered-inverse append: given Q^-1 for the leading block of
/// Q' = [[Q, eta], [eta^T, corner]], returns Q'^-1 without touching Q
/// itself. The Schur complement Z = corner - eta^T Q^-1 eta is inverted
/// explicitly and lands in the trailing diagonal block.
SymMatrix block_inverse_append(const SymMatrix& q_inv, const ColumnBlock& eta,
                               const SymMatrix& corner);

/// Inverse after deleting the given rows/columns of the original matrix:
/// with Q^-1 partitioned into survivor block Theta, coupling xi and deleted
/// corner theta, returns Theta - xi theta^-1 xi^T. Survivor order is
/// preserved; the permutation is virtual (index mapping, no row swaps).
SymMatrix block_inverse_remove(const SymMatrix& q_inv,
                               std::vector<Eigen::Index> remove);

namespace detail {

inline constexpr double kPivotTolerance = 1e-12;

/// Solves a X = rhs by full-pivot LU, refusing pivots below
/// kPivotTolerance relative to the largest one.
Eigen::MatrixXd solve_pivoted(const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& rhs, const char* what);

/// Explicit inverse via full-pivot LU with the same pivot policy.
Eigen::MatrixXd invert_pivoted(const Eigen::MatrixXd& a, const char* what);

/// Explicit inverse of a symmetric positive definite matrix via Cholesky.
Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a, const char* what);

}  // namespace detail

}  // namespace krr
