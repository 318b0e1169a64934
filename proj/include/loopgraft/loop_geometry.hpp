#pragma once

#include "loopgraft/error.hpp"
#include "loopgraft/loops.hpp"
#include "loopgraft/structure.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace loopgraft {

template <typename Scalar>
struct Axis {
  Eigen::Matrix<Scalar, 3, 1> direction;
  Eigen::Matrix<Scalar, 3, 1> centroid;
};

/// Largest-variance direction of a 3xN point set, oriented so that it has a
/// non-negative projection on (last - first). Throws DegenerateSegment.
template <typename Derived>
Axis<typename Derived::Scalar> principal_axis(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  if (points.cols() < 2)
    fail(ErrorCode::DegenerateSegment, "axis fit needs at least 2 points");
  const Vector3 centroid = points.rowwise().mean();
  const auto centred = (points.colwise() - centroid).eval();
  const Matrix3 cov = centred * centred.transpose() / Scalar(points.cols());
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  if (eig.eigenvalues()(2) <= Scalar(1e-12))
    fail(ErrorCode::DegenerateSegment, "axis fit on coincident points");
  Vector3 dir = eig.eigenvectors().col(2).normalized();
  if (dir.dot(points.col(points.cols() - 1) - points.col(0)) < Scalar(0)) dir = -dir;
  return {dir, centroid};
}

/// Angle between two vectors in degrees, [0, 180].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar angle_deg(const Eigen::MatrixBase<DerivedA>& a,
                                    const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar c = a.normalized().dot(b.normalized());
  return std::acos(std::clamp(c, Scalar(-1), Scalar(1))) * Scalar(180) /
         std::numbers::pi_v<Scalar>;
}

/// Rotation of m2 about m1, measured from the component of u perpendicular
/// to m1, in [0, 360). Zero when either projection vanishes.
template <typename Scalar>
Scalar meridian_deg(const Eigen::Matrix<Scalar, 3, 1>& m1, const Eigen::Matrix<Scalar, 3, 1>& m2,
                    const Eigen::Matrix<Scalar, 3, 1>& u) {
  const Eigen::Matrix<Scalar, 3, 1> r = u - u.dot(m1) * m1;
  const Eigen::Matrix<Scalar, 3, 1> a = m2 - m2.dot(m1) * m1;
  if (r.norm() < Scalar(1e-9) || a.norm() < Scalar(1e-9)) return Scalar(0);
  Scalar deg = std::atan2(m1.dot(r.cross(a)), r.dot(a)) * Scalar(180) /
               std::numbers::pi_v<Scalar>;
  if (deg < Scalar(0)) deg += Scalar(360);
  if (deg >= Scalar(360)) deg -= Scalar(360);
  return deg;
}

/// Descriptors from unit axes m1, m2, the coil endpoints p1 (ss1 side) and
/// p2 (ss2 side), and a fallback direction used when p1 == p2.
template <typename Scalar>
LoopGeometry descriptors_from(const Eigen::Matrix<Scalar, 3, 1>& m1,
                              const Eigen::Matrix<Scalar, 3, 1>& m2,
                              const Eigen::Matrix<Scalar, 3, 1>& p1,
                              const Eigen::Matrix<Scalar, 3, 1>& p2,
                              const Eigen::Matrix<Scalar, 3, 1>& fallback) {
  const Eigen::Matrix<Scalar, 3, 1> span = p2 - p1;
  const Scalar d = span.norm();
  Eigen::Matrix<Scalar, 3, 1> u = d > Scalar(1e-9) ? Eigen::Matrix<Scalar, 3, 1>(span / d)
                                                     : fallback.normalized();
  LoopGeometry g;
  g.D = static_cast<double>(d);
  g.theta = static_cast<double>(angle_deg(m1, m2));
  g.delta = static_cast<double>(angle_deg(m1, u));
  g.rho = static_cast<double>(meridian_deg<Scalar>(m1, m2, u));
  return g;
}

/// Principal axis of the segment's Cα. Throws DegenerateSegment.
Axis<double> fit_segment_axis(const Segment& segment, const CaTrace& trace);

/// Throws DegenerateSegment.
LoopGeometry compute_descriptors(const Loop& loop, const CaTrace& trace);

/// Fills `descriptors` on every loop.
void compute_all_descriptors(std::vector<Loop>& loops, const CaTrace& trace);

struct GeometryDelta {
  double dD = 0.0;
  double dDelta = 0.0;
  double dTheta = 0.0;
  double dRho = 0.0;  // circular, [0, 180]
};

double circular_difference_deg(double a, double b);
GeometryDelta descriptor_delta(const LoopGeometry& a, const LoopGeometry& b);

struct PairWeights {
  double sigma_d = 2.0;   // Å
  double sigma_a = 60.0;  // degrees
};

double pair_score(const GeometryDelta& d, const PairWeights& w = {});

struct PairSuggestion {
  std::string scaffold_loop_id;
  std::string insert_loop_id;
  double score = 0.0;
  GeometryDelta components;
  int rank = 0;           // 1-based within the scaffold loop
  bool is_default = false;  // chosen by the greedy one-to-one pass
};

/// Every (candidate, insert) suggestion, grouped by candidate in input order
/// and sorted ascending by score within each group. The default pairing is a
/// greedy one-to-one assignment taking the globally lowest remaining score
/// first. Throws EmptyInsertSet; BadRequest if a loop lacks descriptors.
std::vector<PairSuggestion> suggest_pairs(const std::vector<Loop>& candidates,
                                          const std::vector<Loop>& insert_loops,
                                          const PairWeights& weights = {});

}  // namespace loopgraft
