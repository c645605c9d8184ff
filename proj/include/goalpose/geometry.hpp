// Copyright 2026 The goalpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOALPOSE_GEOMETRY_HPP_
#define GOALPOSE_GEOMETRY_HPP_

// Axis-triple spatial representation and the small amount of rigid-body
// geometry the simulator needs.
//
// Conventions used throughout the library:
//  * An AxisTriple (longitudinal l, binormal b, normal n) is right-handed in
//    the sense b = l x n, hence l x b = -n.
//  * The rotation "frame" of an AxisTriple is the matrix with columns
//    [l, -b, n]. The identity frame is l = +x, n = +z, b = -y, which is a
//    flat object lying along x.
//  * Euler angles are intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "goalpose/error.hpp"

namespace goalpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kUnitTolerance = 1e-9;
inline constexpr double kFrameTolerance = 1e-6;

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

// A direction with unit Euclidean norm (within kUnitTolerance).
class UnitVec3 {
 public:
  UnitVec3() : v_(Vec3::UnitX()) {}

  // Normalizes `v`; throws ZeroAxis for (near) zero or non-finite input.
  static UnitVec3 normalize(const Vec3& v) {
    const double n = v.norm();
    if (!all_finite(v) || !(n > 1e-12)) {
      throw Error(Errc::kZeroAxis, "cannot normalize a zero-length vector");
    }
    return UnitVec3(v / n);
  }

  // Wraps an already-unit vector; throws InvalidArgument otherwise.
  static UnitVec3 from_unit(const Vec3& v) {
    if (!all_finite(v) || std::abs(v.norm() - 1.0) > kUnitTolerance) {
      throw Error(Errc::kInvalidArgument, "vector is not unit length");
    }
    return UnitVec3(v);
  }

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }  // NOLINT(google-explicit-constructor)
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const Vec3& o) const { return v_.dot(o); }
  UnitVec3 operator-() const { return UnitVec3(-v_); }

 private:
  explicit UnitVec3(const Vec3& v) : v_(v) {}
  Vec3 v_;
};

struct AxisTriple {
  UnitVec3 longitudinal;
  UnitVec3 binormal;
  UnitVec3 normal;

  // Builds the triple from its two PCA axes; binormal = l x n.
  static AxisTriple from_longitudinal_normal(const UnitVec3& l,
                                             const UnitVec3& n) {
    return {l, UnitVec3::normalize(l.vec().cross(n.vec())), n};
  }

  bool is_valid(double tol = kFrameTolerance) const {
    const Vec3& l = longitudinal;
    const Vec3& b = binormal;
    const Vec3& n = normal;
    return std::abs(l.dot(b)) <= tol && std::abs(l.dot(n)) <= tol &&
           std::abs(b.dot(n)) <= tol &&
           (l.cross(n) - b).cwiseAbs().maxCoeff() <= tol;
  }
};

inline AxisTriple identity_axes() {
  return {UnitVec3::from_unit(Vec3::UnitX()),
          UnitVec3::from_unit(-Vec3::UnitY()),
          UnitVec3::from_unit(Vec3::UnitZ())};
}

inline bool is_rotation(const Mat3& r, double tol = kUnitTolerance) {
  if (!r.allFinite()) return false;
  const Mat3 e = r.transpose() * r - Mat3::Identity();
  return e.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

// Proper rotation, R^T R = I and det R = 1.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}

  static RotationMatrix from_matrix(const Mat3& m, double tol = kUnitTolerance) {
    if (!is_rotation(m, tol)) {
      throw Error(Errc::kNonOrthonormalFrame, "matrix is not a proper rotation");
    }
    return RotationMatrix(m);
  }

  const Mat3& matrix() const { return m_; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  RotationMatrix operator*(const RotationMatrix& o) const {
    return RotationMatrix(m_ * o.m_);
  }
  RotationMatrix transpose() const { return RotationMatrix(m_.transpose()); }

 private:
  explicit RotationMatrix(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

// Columns [l, -b, n].
inline Mat3 frame_from_axes(const AxisTriple& t) {
  Mat3 m;
  m.col(0) = t.longitudinal.vec();
  m.col(1) = -t.binormal.vec();
  m.col(2) = t.normal.vec();
  return m;
}

inline AxisTriple axes_from_frame(const Mat3& m) {
  return {UnitVec3::normalize(m.col(0)), UnitVec3::normalize(-m.col(1)),
          UnitVec3::normalize(m.col(2))};
}

// ---------------------------------------------------------------------------
// PCA axis extraction

namespace detail {

// Index of the component with the largest magnitude; ties go to x, then y.
inline int dominant_component(const Vec3& v) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-9) best = i;
  }
  return best;
}

inline Vec3 canonical_sign(const Vec3& v) {
  return v[dominant_component(v)] < 0 ? Vec3(-v) : v;
}

// World axis (x, y, z order on ties) with the largest projection onto the
// plane orthogonal to `plane_normal`, normalized after projection.
inline Vec3 world_axis_in_plane(const Vec3& plane_normal) {
  Vec3 best = Vec3::Zero();
  double best_norm = -1.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = Vec3::Unit(i);
    const Vec3 p = e - e.dot(plane_normal) * plane_normal;
    if (p.norm() > best_norm + 1e-9) {
      best_norm = p.norm();
      best = p;
    }
  }
  return best.normalized();
}

}  // namespace detail

struct PrincipalAxesResult {
  AxisTriple axes;
  Vec3 eigenvalues;  // descending, population covariance
};

// Longitudinal = eigenvector of the largest covariance eigenvalue, normal =
// eigenvector of the smallest. Repeated eigenvalues (relative gap <= 1e-6)
// leave the eigenspace ambiguous; the ambiguous directions are then taken
// from the world axes projected into that eigenspace so cubes and square
// prisms still read deterministically. Signs are canonicalized so the
// largest-magnitude component of l and of n is positive.
inline PrincipalAxesResult principal_axes_detailed(std::span<const Vec3> points) {
  if (points.size() < 4) {
    throw Error(Errc::kDegenerateCloud, "need at least 4 points");
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) {
    if (!all_finite(p)) throw Error(Errc::kDegenerateCloud, "non-finite point");
    mean += p;
  }
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3 ev = solver.eigenvalues();  // ascending
  const Mat3 vecs = solver.eigenvectors();
  if (!(ev[2] > 1e-24) || ev[1] <= 1e-10 * ev[2]) {
    throw Error(Errc::kDegenerateCloud, "covariance rank below 2");
  }

  const double tie = 1e-6 * ev[2];
  const bool top_tied = ev[2] - ev[1] <= tie;
  const bool bottom_tied = ev[1] - ev[0] <= tie;
  Vec3 l;
  Vec3 n;
  if (top_tied && bottom_tied) {
    l = Vec3::UnitX();
    n = Vec3::UnitZ();
  } else if (top_tied) {
    n = vecs.col(0).normalized();
    l = detail::world_axis_in_plane(n);
  } else if (bottom_tied) {
    l = vecs.col(2).normalized();
    const Vec3 middle = detail::world_axis_in_plane(l);
    n = l.cross(middle).normalized();
  } else {
    l = vecs.col(2).normalized();
    n = vecs.col(0).normalized();
    // Re-orthogonalize against solver round-off.
    n = (n - n.dot(l) * l).normalized();
  }
  l = detail::canonical_sign(l);
  n = detail::canonical_sign(n);
  return {AxisTriple::from_longitudinal_normal(UnitVec3::normalize(l),
                                               UnitVec3::normalize(n)),
          Vec3(ev[2], ev[1], ev[0])};
}

inline AxisTriple principal_axes(std::span<const Vec3> points) {
  return principal_axes_detailed(points).axes;
}

// ---------------------------------------------------------------------------
// Goal rotation from axis pairs

// Gram-Schmidt repair of an approximately orthogonal (a, b) pair.
inline std::pair<UnitVec3, UnitVec3> orthonormalize(const Vec3& a, const Vec3& b) {
  if (!all_finite(a) || a.norm() <= 1e-6) {
    throw Error(Errc::kZeroAxis, "longitudinal axis has zero length");
  }
  if (!all_finite(b) || b.norm() <= 1e-6) {
    throw Error(Errc::kZeroAxis, "binormal axis has zero length");
  }
  const Vec3 ah = a / a.norm();
  const Vec3 perp = b - b.dot(ah) * ah;
  const double angle = std::atan2(perp.norm(), std::abs(b.dot(ah)));
  if (angle < 1e-4) {
    throw Error(Errc::kParallelAxes, "binormal is parallel to longitudinal");
  }
  return {UnitVec3::from_unit(ah), UnitVec3::normalize(perp)};
}

namespace detail {
inline void require_orthonormal_pair(const Vec3& a, const Vec3& b,
                                     const char* what) {
  if (!all_finite(a) || !all_finite(b) ||
      std::abs(a.norm() - 1.0) > kFrameTolerance ||
      std::abs(b.norm() - 1.0) > kFrameTolerance ||
      std::abs(a.dot(b)) > kFrameTolerance) {
    throw Error(Errc::kNonOrthonormalFrame, what);
  }
}
}  // namespace detail

// R = a a0^T + b b0^T + (a x b)(a0 x b0)^T, which maps a0 -> a and b0 -> b.
inline RotationMatrix rotation_from_axis_goal(const Vec3& a, const Vec3& b,
                                              const Vec3& a0, const Vec3& b0) {
  detail::require_orthonormal_pair(a, b, "goal axes are not orthonormal");
  detail::require_orthonormal_pair(a0, b0, "initial axes are not orthonormal");
  const Mat3 r = a * a0.transpose() + b * b0.transpose() +
                 a.cross(b) * a0.cross(b0).transpose();
  return RotationMatrix::from_matrix(r, 1e-6);
}

// ---------------------------------------------------------------------------
// Euler angles (intrinsic Z-Y-X)

struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

struct EulerConversion {
  EulerAngles angles;
  bool gimbal_lock = false;
};

namespace detail {
// Maps into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}
}  // namespace detail

inline Mat3 euler_to_matrix(const EulerAngles& e) {
  return (Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(e.pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(e.roll, Vec3::UnitX()))
      .toRotationMatrix();
}

inline EulerConversion matrix_to_euler(const Mat3& r) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  const double s = std::clamp(-r(2, 0), -1.0, 1.0);
  EulerConversion out;
  out.angles.pitch = std::asin(s);
  if (kHalfPi - std::abs(out.angles.pitch) <= 1e-6) {
    // Only yaw - roll (or yaw + roll) is observable; report roll = 0.
    out.gimbal_lock = true;
    out.angles.pitch = std::copysign(kHalfPi, s);
    out.angles.roll = 0.0;
    out.angles.yaw = detail::wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
    return out;
  }
  out.angles.roll = detail::wrap_angle(std::atan2(r(2, 1), r(2, 2)));
  out.angles.yaw = detail::wrap_angle(std::atan2(r(1, 0), r(0, 0)));
  return out;
}

inline EulerConversion axes_to_euler(const AxisTriple& t) {
  return matrix_to_euler(frame_from_axes(t));
}

inline AxisTriple euler_to_axes(const EulerAngles& e) {
  if (!(std::abs(e.pitch) <= std::numbers::pi / 2.0 + 1e-12)) {
    throw Error(Errc::kInvalidArgument, "pitch outside [-pi/2, pi/2]");
  }
  return axes_from_frame(euler_to_matrix(e));
}

// ---------------------------------------------------------------------------
// Oriented boxes

// Box with half extents measured along the columns of `rotation`.
struct Obb {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);
  Mat3 rotation = Mat3::Identity();

  Vec3 axis(int i) const { return rotation.col(i); }

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
      const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0,
                   (i & 4) ? 1.0 : -1.0);
      out[i] = center + rotation * s.cwiseProduct(half_extents);
    }
    return out;
  }

  Vec3 to_local(const Vec3& p) const { return rotation.transpose() * (p - center); }

  bool contains(const Vec3& p, double tol = 0.0) const {
    const Vec3 q = to_local(p);
    return (q.cwiseAbs() - half_extents).maxCoeff() <= tol;
  }

  // Half-width of the box projected onto direction `d` (unit).
  double support_radius(const Vec3& d) const {
    return (rotation.transpose() * d).cwiseAbs().dot(half_extents);
  }

  double min_z() const { return center.z() - support_radius(Vec3::UnitZ()); }
  double max_z() const { return center.z() + support_radius(Vec3::UnitZ()); }

  // Euclidean distance from p to the box (0 inside).
  double distance_to(const Vec3& p) const {
    const Vec3 q = to_local(p);
    return (q.cwiseAbs() - half_extents).cwiseMax(0.0).norm();
  }
};

// Smallest overlap of the two boxes' projections over the 15 separating-axis
// candidates (3 + 3 face normals, 9 edge cross products). Negative when a
// separating axis exists.
inline double obb_overlap_depth(const Obb& p, const Obb& q) {
  const Vec3 d = q.center - p.center;
  double depth = std::numeric_limits<double>::infinity();
  auto test = [&](const Vec3& axis) {
    const double rp = p.support_radius(axis);
    const double rq = q.support_radius(axis);
    depth = std::min(depth, rp + rq - std::abs(d.dot(axis)));
  };
  for (int i = 0; i < 3; ++i) test(p.axis(i));
  for (int i = 0; i < 3; ++i) test(q.axis(i));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Vec3 c = p.axis(i).cross(q.axis(j));
      const double n = c.norm();
      // Parallel edges: the face axes above already cover this direction.
      if (n > 1e-9) test(c / n);
    }
  }
  return depth;
}

// True iff the (closed) boxes overlap.
inline bool obb_intersects(const Obb& p, const Obb& q) {
  return obb_overlap_depth(p, q) >= 0.0;
}

}  // namespace goalpose

#endif  // GOALPOSE_GEOMETRY_HPP_
