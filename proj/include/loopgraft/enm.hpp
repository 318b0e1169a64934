#pragma once

#include "loopgraft/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <queue>
#include <string>
#include <vector>

namespace loopgraft::enm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Contact pairs (i < j) with |r_i - r_j| <= cutoff.
template <typename Derived>
std::vector<std::pair<Eigen::Index, Eigen::Index>> contacts(
    const Eigen::MatrixBase<Derived>& positions, typename Derived::Scalar cutoff) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  const auto cutoff2 = cutoff * cutoff;
  for (Eigen::Index i = 0; i < positions.cols(); ++i)
    for (Eigen::Index j = i + 1; j < positions.cols(); ++j)
      if ((positions.col(i) - positions.col(j)).squaredNorm() <= cutoff2) out.emplace_back(i, j);
  return out;
}

/// Sparse Kirchhoff (graph Laplacian) matrix of the contact map.
template <typename Derived>
Eigen::SparseMatrix<typename Derived::Scalar> kirchhoff_sparse(
    const Eigen::MatrixBase<Derived>& positions, typename Derived::Scalar cutoff) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = positions.cols();
  std::vector<Eigen::Triplet<Scalar>> t;
  std::vector<Scalar> degree(static_cast<std::size_t>(n), Scalar(0));
  for (auto [i, j] : contacts(positions, cutoff)) {
    t.emplace_back(i, j, Scalar(-1));
    t.emplace_back(j, i, Scalar(-1));
    degree[static_cast<std::size_t>(i)] += Scalar(1);
    degree[static_cast<std::size_t>(j)] += Scalar(1);
  }
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, degree[static_cast<std::size_t>(i)]);
  Eigen::SparseMatrix<Scalar> g(n, n);
  g.setFromTriplets(t.begin(), t.end());
  return g;
}

template <typename Derived>
Matrix<typename Derived::Scalar> kirchhoff(const Eigen::MatrixBase<Derived>& positions,
                                           typename Derived::Scalar cutoff) {
  return Matrix<typename Derived::Scalar>(kirchhoff_sparse(positions, cutoff));
}

/// Number of connected components of the contact graph.
template <typename Scalar>
int component_count(const Eigen::SparseMatrix<Scalar>& laplacian) {
  const Eigen::Index n = laplacian.rows();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int components = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    std::queue<Eigen::Index> q;
    q.push(s);
    label[static_cast<std::size_t>(s)] = components;
    while (!q.empty()) {
      const Eigen::Index v = q.front();
      q.pop();
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(laplacian, v); it; ++it) {
        if (it.row() == v || it.value() == Scalar(0)) continue;
        auto& l = label[static_cast<std::size_t>(it.row())];
        if (l < 0) {
          l = components;
          q.push(it.row());
        }
      }
    }
    ++components;
  }
  return components;
}

/// Moore-Penrose pseudo-inverse of the Kirchhoff matrix. The last node is
/// grounded, the remaining (positive definite) block is factored with a
/// sparse LDLT, and the resulting generalized inverse X is projected:
/// Γ⁺ = P X P with P = I - 11ᵀ/n. Throws DisconnectedContactGraph.
template <typename Derived>
Matrix<typename Derived::Scalar> gnm_pseudo_inverse(const Eigen::MatrixBase<Derived>& positions,
                                                    typename Derived::Scalar cutoff) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = positions.cols();
  if (n < 2) fail(ErrorCode::TooFewResidues, "GNM needs at least 2 residues");
  const auto gamma = kirchhoff_sparse(positions, cutoff);
  if (int c = component_count(gamma); c > 1)
    fail(ErrorCode::DisconnectedContactGraph,
         "contact graph at cutoff " + std::to_string(static_cast<double>(cutoff)) + " has " +
             std::to_string(c) + " components");

  const Eigen::SparseMatrix<Scalar> grounded = gamma.topLeftCorner(n - 1, n - 1);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt(grounded);
  if (ldlt.info() != Eigen::Success)
    fail(ErrorCode::IllConditioned, "grounded Kirchhoff factorization failed");
  Matrix<Scalar> x = Matrix<Scalar>::Zero(n, n);
  x.topLeftCorner(n - 1, n - 1) = ldlt.solve(Matrix<Scalar>::Identity(n - 1, n - 1));

  // P X P without forming P: subtract row and column means.
  x.rowwise() -= x.colwise().mean();
  x.colwise() -= x.rowwise().mean();
  return x;
}

/// Anisotropic network Hessian, unit spring constant.
template <typename Derived>
Matrix<typename Derived::Scalar> hessian(const Eigen::MatrixBase<Derived>& positions,
                                         typename Derived::Scalar cutoff) {
  using Scalar = typename Derived::Scalar;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  const Eigen::Index n = positions.cols();
  Matrix<Scalar> h = Matrix<Scalar>::Zero(3 * n, 3 * n);
  for (auto [i, j] : contacts(positions, cutoff)) {
    const Vector3 d = positions.col(j) - positions.col(i);
    const Eigen::Matrix<Scalar, 3, 3> block = -(d * d.transpose()) / d.squaredNorm();
    h.template block<3, 3>(3 * i, 3 * j) = block;
    h.template block<3, 3>(3 * j, 3 * i) = block;
    h.template block<3, 3>(3 * i, 3 * i) -= block;
    h.template block<3, 3>(3 * j, 3 * j) -= block;
  }
  return h;
}

/// Orthonormal 3n x 6 basis of rigid translations and rotations about the
/// centroid. Throws IllConditioned when the rotations are rank deficient
/// (collinear input).
template <typename Derived>
Matrix<typename Derived::Scalar> rigid_body_basis(const Eigen::MatrixBase<Derived>& positions) {
  using Scalar = typename Derived::Scalar;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  const Eigen::Index n = positions.cols();
  const Vector3 c = positions.rowwise().mean();
  Matrix<Scalar> raw = Matrix<Scalar>::Zero(3 * n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 r = positions.col(i) - c;
    for (int k = 0; k < 3; ++k) {
      raw(3 * i + k, k) = Scalar(1);
      raw.template block<3, 1>(3 * i, 3 + k) = Vector3::Unit(k).cross(r);
    }
  }
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(raw);
  qr.setThreshold(Scalar(1e-8));
  if (qr.rank() < 6)
    fail(ErrorCode::IllConditioned, "rigid-body basis has rank " + std::to_string(qr.rank()) +
                                        " (collinear coordinates)");
  return qr.householderQ() * Matrix<Scalar>::Identity(3 * n, 6);
}

/// Pseudo-inverse of the ANM Hessian as (H + QQᵀ)⁻¹ - QQᵀ with Q the rigid
/// basis. Throws IllConditioned when more than six zero modes remain.
template <typename Derived>
Matrix<typename Derived::Scalar> anm_pseudo_inverse(const Eigen::MatrixBase<Derived>& positions,
                                                    typename Derived::Scalar cutoff,
                                                    typename Derived::Scalar min_rcond = 1e-8) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = positions.cols();
  if (n < 4) fail(ErrorCode::TooFewResidues, "ANM needs at least 4 residues");
  const Matrix<Scalar> q = rigid_body_basis(positions);
  const Matrix<Scalar> qqt = q * q.transpose();
  const Matrix<Scalar> shifted = hessian(positions, cutoff) + qqt;
  Eigen::LDLT<Matrix<Scalar>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < min_rcond)
    fail(ErrorCode::IllConditioned, "ANM Hessian has more than six zero modes (rcond " +
                                        std::to_string(static_cast<double>(ldlt.rcond())) + ")");
  return ldlt.solve(Matrix<Scalar>::Identity(3 * n, 3 * n)) - qqt;
}

/// Γ⁺ restricted to the `modes` lowest nonzero Kirchhoff modes (all when
/// fewer exist). Throws DisconnectedContactGraph.
template <typename Derived>
Matrix<typename Derived::Scalar> gnm_mode_pseudo_inverse(
    const Eigen::MatrixBase<Derived>& positions, typename Derived::Scalar cutoff, int modes) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> gamma = kirchhoff(positions, cutoff);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gamma);
  const auto& lambda = eig.eigenvalues();
  const Scalar tol = Scalar(1e-8) * lambda.cwiseAbs().maxCoeff();
  Eigen::Index zero = 0;
  while (zero < lambda.size() && std::abs(lambda(zero)) < tol) ++zero;
  if (zero > 1)
    fail(ErrorCode::DisconnectedContactGraph,
         "Kirchhoff matrix has " + std::to_string(zero) + " zero modes");
  const Eigen::Index take =
      std::min<Eigen::Index>(lambda.size() - zero, std::max<Eigen::Index>(modes, 0));
  const auto v = eig.eigenvectors().middleCols(zero, take);
  return v * lambda.segment(zero, take).cwiseInverse().asDiagonal() * v.transpose();
}

/// Normalized covariance C_ij = G_ij / sqrt(G_ii G_jj). Residues whose
/// variance is below 1e-12 of the largest one (nodes of every retained mode)
/// get zero off-diagonal entries.
template <typename Scalar>
Matrix<Scalar> normalized_covariance(const Matrix<Scalar>& g) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> var = g.diagonal().cwiseMax(Scalar(0));
  const Scalar floor = var.size() ? Scalar(1e-12) * var.maxCoeff() : Scalar(0);
  for (Eigen::Index i = 0; i < var.size(); ++i)
    if (var(i) <= floor) var(i) = Scalar(0);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s = var.cwiseSqrt();
  Matrix<Scalar> c = g;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      const Scalar den = s(i) * s(j);
      c(i, j) = den > Scalar(0) ? std::clamp(g(i, j) / den, Scalar(-1), Scalar(1)) : Scalar(0);
    }
  c.diagonal().setOnes();
  return c;
}

}  // namespace loopgraft::enm
