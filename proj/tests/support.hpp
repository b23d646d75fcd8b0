// Shared helpers for the unit and acceptance suites: deterministic random
// inputs with bounded conditioning, and dense-solve oracles that compute the
// same quantities as the library through independent factorizations.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "krrstream/sample.hpp"

namespace test_support {

inline double unit_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

inline double unit_normal(std::mt19937_64& rng) {
  const double angle = 2.0 * M_PI * unit_uniform(rng);
  const double mag = std::sqrt(-2.0 * std::log(unit_uniform(rng)));
  return mag * std::cos(angle);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n,
                                     double scale = 1.0) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = scale * unit_normal(rng);
  return out;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols, double scale = 1.0) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = scale * unit_normal(rng);
  }
  return out;
}

/// Random SPD matrix with spectrum in [1, cond] (endpoints pinned for n >= 2),
/// built as Q diag(lambda) Q^T from a random orthogonal factor.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n,
                                  double cond) {
  const Eigen::MatrixXd g = random_matrix(rng, n, n);
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lambda(i) = std::exp(std::log(cond) * unit_uniform(rng));
  }
  lambda(0) = 1.0;
  if (n > 1) lambda(n - 1) = cond;
  const Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
  return (a + a.transpose()) / 2.0;
}

/// SPD matrix and its inverse built from the same eigenfactors, so the pair
/// is mutually consistent to machine precision instead of carrying the
/// O(cond * eps) error of a dense inversion.
struct SpdPair {
  Eigen::MatrixXd mat;
  Eigen::MatrixXd inv;
};

inline SpdPair random_spd_pair(std::mt19937_64& rng, Eigen::Index n,
                               double cond) {
  const Eigen::MatrixXd g = random_matrix(rng, n, n);
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lambda(i) = std::exp(std::log(cond) * unit_uniform(rng));
  }
  lambda(0) = 1.0;
  if (n > 1) lambda(n - 1) = cond;
  const Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
  const Eigen::MatrixXd b =
      q * lambda.cwiseInverse().asDiagonal() * q.transpose();
  return {(a + a.transpose()) / 2.0, (b + b.transpose()) / 2.0};
}

inline double rel_err(const Eigen::MatrixXd& value,
                      const Eigen::MatrixXd& reference) {
  return (value - reference).cwiseAbs().maxCoeff() /
         (1.0 + reference.cwiseAbs().maxCoeff());
}

inline double rel_err(double value, double reference) {
  return std::abs(value - reference) / (1.0 + std::abs(reference));
}

/// Exact elementwise equality for dense Eigen objects (shape plus values).
template <typename A, typename B>
inline bool exact_eq(const Eigen::MatrixBase<A>& a,
                     const Eigen::MatrixBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.derived().array() == b.derived().array()).all();
}

inline std::vector<krr::LabeledSample> random_samples(std::mt19937_64& rng,
                                                      Eigen::Index n,
                                                      Eigen::Index dim,
                                                      double scale = 1.0,
                                                      krr::SampleId id_start = 0) {
  std::vector<krr::LabeledSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    krr::LabeledSample s;
    s.id = id_start + static_cast<krr::SampleId>(i);
    s.x = random_vector(rng, dim, scale);
    s.y = unit_normal(rng);
    out.push_back(std::move(s));
  }
  return out;
}

struct BorderedSolution {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

/// Primal oracle: solves the full (J+1) x (J+1) system
///   [[Phi Phi^T + ridge I, Phi e], [(Phi e)^T, n]] [u; b] = [Phi y; sum y]
/// in one dense factorization.
inline BorderedSolution solve_primal_dense(const Eigen::MatrixXd& phi,
                                           const Eigen::VectorXd& y,
                                           double ridge) {
  const Eigen::Index j = phi.rows();
  const Eigen::Index n = phi.cols();
  Eigen::MatrixXd a(j + 1, j + 1);
  a.topLeftCorner(j, j) =
      phi * phi.transpose() + ridge * Eigen::MatrixXd::Identity(j, j);
  a.topRightCorner(j, 1) = phi.rowwise().sum();
  a.bottomLeftCorner(1, j) = a.topRightCorner(j, 1).transpose();
  a(j, j) = static_cast<double>(n);
  Eigen::VectorXd rhs(j + 1);
  rhs.head(j) = phi * y;
  rhs(j) = y.sum();
  const Eigen::VectorXd x = a.fullPivLu().solve(rhs);
  return {x.head(j), x(j)};
}

/// Dual oracle: b = y^T Q^-1 e / (e^T Q^-1 e), a = Q^-1 (y - b e), with the
/// two solves done by dense LU on Q = K + ridge I.
inline BorderedSolution solve_dual_dense(const Eigen::MatrixXd& k,
                                         const Eigen::VectorXd& y,
                                         double ridge) {
  const Eigen::Index n = k.rows();
  const Eigen::MatrixXd q = k + ridge * Eigen::MatrixXd::Identity(n, n);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(q);
  const Eigen::VectorXd w = lu.solve(Eigen::VectorXd::Ones(n));
  const double b = y.dot(w) / w.sum();
  const Eigen::VectorXd a = lu.solve((y.array() - b).matrix());
  return {a, b};
}

}  // namespace test_support
