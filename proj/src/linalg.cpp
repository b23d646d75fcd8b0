#include "krrstream/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

namespace krr {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return (m + m.transpose()) / 2.0;
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionMismatch("SymMatrix requires a square matrix of order >= 1, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  mat_ = symmetrized(m);
}

SymMatrix SymMatrix::identity(Eigen::Index order) {
  return adopt_symmetric(Eigen::MatrixXd::Identity(order, order));
}

SymMatrix SymMatrix::adopt_symmetric(Eigen::MatrixXd m) {
  assert(m.rows() == m.cols() && m.rows() >= 1);
  assert((m.array() == m.transpose().array()).all());
  SymMatrix out;
  out.mat_ = std::move(m);
  return out;
}

namespace detail {

namespace {

void check_pivots(const Eigen::FullPivLU<Eigen::MatrixXd>& lu, const char* what) {
  const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
  const double largest = diag.size() > 0 ? diag.maxCoeff() : 0.0;
  if (diag.size() == 0 || diag.minCoeff() <= kPivotTolerance * (1.0 + largest)) {
    throw SingularPivot(std::string(what) + ": pivot below tolerance");
  }
}

}  // namespace

Eigen::MatrixXd solve_pivoted(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs,
                              const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  check_pivots(lu, what);
  return lu.solve(rhs);
}

Eigen::MatrixXd invert_pivoted(const Eigen::MatrixXd& a, const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  check_pivots(lu, what);
  return lu.inverse();
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw SingularPivot(std::string(what) + ": matrix is not positive definite");
  }
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal().cwiseAbs();
  if (diag.minCoeff() <= kPivotTolerance * (1.0 + diag.maxCoeff())) {
    throw SingularPivot(std::string(what) + ": Cholesky pivot below tolerance");
  }
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

}  // namespace detail

SymMatrix rank1_update(const SymMatrix& s_inv, const Eigen::VectorXd& v,
                       UpdateSign sign) {
  if (v.size() != s_inv.order()) {
    throw DimensionMismatch("rank1_update: vector length " + std::to_string(v.size()) +
                            " does not match order " + std::to_string(s_inv.order()));
  }
  const double sgn = sign == UpdateSign::Add ? 1.0 : -1.0;
  const Eigen::VectorXd w = s_inv.mat() * v;
  const double quad = v.dot(w);
  // (S + sgn v v^T)^-1 = S^-1 - sgn (S^-1 v)(S^-1 v)^T / (1 + sgn v^T S^-1 v)
  const double denom = 1.0 + sgn * quad;
  if (std::abs(denom) <= detail::kPivotTolerance * (1.0 + std::abs(quad))) {
    throw SingularPivot("rank1_update: denominator 1 " +
                        std::string(sign == UpdateSign::Add ? "+" : "-") +
                        " v^T S^-1 v is singular to tolerance");
  }
  // The outer product is materialized first so the scalar multiplies entries
  // that are already symmetric bit-for-bit; folding the scalar into the
  // product would scale w on one side only and break exact symmetry.
  const Eigen::MatrixXd outer = w * w.transpose();
  return SymMatrix::adopt_symmetric(s_inv.mat() - (sgn / denom) * outer);
}

SymMatrix rankk_update(const SymMatrix& s_inv, const ColumnBlock& add,
                       const ColumnBlock& remove) {
  const Eigen::Index order = s_inv.order();
  if (add.cols() > 0 && add.rows() != order) {
    throw DimensionMismatch("rankk_update: append block has " +
                            std::to_string(add.rows()) + " rows, expected " +
                            std::to_string(order));
  }
  if (remove.cols() > 0 && remove.rows() != order) {
    throw DimensionMismatch("rankk_update: remove block has " +
                            std::to_string(remove.rows()) + " rows, expected " +
                            std::to_string(order));
  }
  const Eigen::Index ka = add.cols();
  const Eigen::Index kr = remove.cols();
  const Eigen::Index k = ka + kr;
  if (k == 0) return s_inv;
  if (k == 1) {
    return ka == 1 ? rank1_update(s_inv, add.col(0), UpdateSign::Add)
                   : rank1_update(s_inv, remove.col(0), UpdateSign::Remove);
  }

  // Woodbury with U = [A | R], V = [A | -R]^T:
  //   (S + A A^T - R R^T)^-1 = S^-1 - S^-1 U (I_k + V S^-1 U)^-1 V S^-1.
  ColumnBlock u(order, k);
  if (ka > 0) u.leftCols(ka) = add;
  if (kr > 0) u.rightCols(kr) = remove;
  ColumnBlock u_signed = u;
  if (kr > 0) u_signed.rightCols(kr) *= -1.0;

  const Eigen::MatrixXd si_u = s_inv.mat() * u;
  const Eigen::MatrixXd capacitance =
      Eigen::MatrixXd::Identity(k, k) + u_signed.transpose() * si_u;
  // V S^-1 = (S^-1 [A | -R])^T; its rows are the signed columns of si_u.
  Eigen::MatrixXd v_si = si_u.transpose();
  if (kr > 0) v_si.bottomRows(kr) *= -1.0;
  const Eigen::MatrixXd correction =
      si_u * detail::solve_pivoted(capacitance, v_si, "rankk_update");
  return SymMatrix::adopt_symmetric(
      s_inv.mat() - (correction + correction.transpose()) / 2.0);
}

SymMatrix block_inverse_append(const SymMatrix& q_inv, const ColumnBlock& eta,
                               const SymMatrix& corner) {
  const Eigen::Index n = q_inv.order();
  const Eigen::Index k = corner.order();
  if (eta.rows() != n || eta.cols() != k) {
    throw DimensionMismatch("block_inverse_append: coupling block is " +
                            std::to_string(eta.rows()) + "x" + std::to_string(eta.cols()) +
                            ", expected " + std::to_string(n) + "x" + std::to_string(k));
  }

  // With Q' = [[Q, eta], [eta^T, corner]] and B = Q^-1 eta:
  //   Z = corner - eta^T B,   Q'^-1 = [[Q^-1 + B Z^-1 B^T, -B Z^-1],
  //                                    [-Z^-1 B^T,          Z^-1  ]].
  const Eigen::MatrixXd b = q_inv.mat() * eta;
  const Eigen::MatrixXd z = symmetrized(corner.mat() - eta.transpose() * b);
  const Eigen::MatrixXd z_inv =
      symmetrized(detail::invert_pivoted(z, "block_inverse_append"));

  // Assembled blocks are symmetric bit-for-bit (the correction is averaged
  // with its transpose, the strips are exact mirrors), so the symmetrizing
  // constructor pass is not needed.
  Eigen::MatrixXd out(n + k, n + k);
  const Eigen::MatrixXd bz = b * z_inv;
  const Eigen::MatrixXd g = bz * b.transpose();
  out.topLeftCorner(n, n) = q_inv.mat() + (g + g.transpose()) / 2.0;
  out.topRightCorner(n, k) = -bz;
  out.bottomLeftCorner(k, n) = -bz.transpose();
  out.bottomRightCorner(k, k) = z_inv;
  return SymMatrix::adopt_symmetric(std::move(out));
}

SymMatrix block_inverse_remove(const SymMatrix& q_inv,
                               std::vector<Eigen::Index> remove) {
  const Eigen::Index n = q_inv.order();
  std::sort(remove.begin(), remove.end());
  for (std::size_t i = 0; i < remove.size(); ++i) {
    if (remove[i] < 0 || remove[i] >= n) {
      throw IndexOutOfRange("block_inverse_remove: index " +
                            std::to_string(remove[i]) + " outside order " +
                            std::to_string(n));
    }
    if (i > 0 && remove[i] == remove[i - 1]) {
      throw IndexOutOfRange("block_inverse_remove: duplicate index " +
                            std::to_string(remove[i]));
    }
  }
  const auto k = static_cast<Eigen::Index>(remove.size());
  if (k == 0) return q_inv;
  if (k >= n) {
    throw IndexOutOfRange("block_inverse_remove: cannot delete all " +
                          std::to_string(n) + " rows");
  }

  std::vector<Eigen::Index> keep;
  keep.reserve(n - k);
  std::size_t next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (next < remove.size() && remove[next] == i) {
      ++next;
    } else {
      keep.push_back(i);
    }
  }

  // Partition Q^-1 by survivor/deleted positions; the survivor inverse is the
  // Schur complement Theta - xi theta^-1 xi^T.
  const Eigen::MatrixXd theta = q_inv.mat()(keep, keep);
  const Eigen::MatrixXd xi = q_inv.mat()(keep, remove);
  const Eigen::MatrixXd theta_r = q_inv.mat()(remove, remove);
  const Eigen::MatrixXd x =
      detail::solve_pivoted(theta_r, xi.transpose(), "block_inverse_remove");
  const Eigen::MatrixXd g = xi * x;
  return SymMatrix::adopt_symmetric(theta - (g + g.transpose()) / 2.0);
}

}  // namespace krr
