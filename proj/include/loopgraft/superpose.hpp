#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

namespace loopgraft {

template <typename Scalar>
struct RigidTransform {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  /// Applies to a 3xN block of column points.
  template <typename Derived>
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> operator()(
      const Eigen::MatrixBase<Derived>& points) const {
    return (rotation * points).colwise() + translation;
  }

  Vector3 apply(const Vector3& p) const { return rotation * p + translation; }
};

/// Least-squares proper rotation + translation mapping `mobile` onto
/// `target` (both 3xN, same column order). Uses the SVD of the covariance
/// with a determinant correction so reflections never appear.
template <typename DerivedA, typename DerivedB>
RigidTransform<typename DerivedA::Scalar> kabsch(
    const Eigen::MatrixBase<DerivedA>& mobile,
    const Eigen::MatrixBase<DerivedB>& target) {
  using Scalar = typename DerivedA::Scalar;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  eigen_assert(mobile.cols() == target.cols() && mobile.rows() == 3);

  const Vector3 mobile_centroid = mobile.rowwise().mean();
  const Vector3 target_centroid = target.rowwise().mean();
  const Matrix3 covariance = (mobile.colwise() - mobile_centroid) *
                             (target.colwise() - target_centroid).transpose();

  Eigen::JacobiSVD<Matrix3> svd(covariance, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 correction = Matrix3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < Scalar(0))
    correction(2, 2) = Scalar(-1);

  RigidTransform<Scalar> out;
  out.rotation = svd.matrixV() * correction * svd.matrixU().transpose();
  out.translation = target_centroid - out.rotation * mobile_centroid;
  return out;
}

/// Root-mean-square deviation of corresponding columns, no fitting.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rmsd(const Eigen::MatrixBase<DerivedA>& a,
                               const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() == 0) return Scalar(0);
  return std::sqrt((a - b).colwise().squaredNorm().mean());
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar superposed_rmsd(const Eigen::MatrixBase<DerivedA>& mobile,
                                          const Eigen::MatrixBase<DerivedB>& target) {
  return rmsd(kabsch(mobile, target)(mobile), target);
}

}  // namespace loopgraft
