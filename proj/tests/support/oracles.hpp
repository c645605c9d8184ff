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

#ifndef GOALPOSE_TESTS_SUPPORT_ORACLES_HPP_
#define GOALPOSE_TESTS_SUPPORT_ORACLES_HPP_

// Independent reference computations used to derive expected values. Nothing
// here calls into the code paths it is used to check.

#include <array>
#include <cmath>
#include <vector>

#include "goalpose/geometry.hpp"
#include "goalpose/rng.hpp"

namespace goalpose::oracle {

inline double gaussian(Rng& rng) {
  const double u1 = std::max(rng.uniform(), 1e-300);
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline Vec3 random_unit(Rng& rng) {
  Vec3 v(gaussian(rng), gaussian(rng), gaussian(rng));
  return v / v.norm();
}

// Uniform random rotation from a normalized Gaussian quaternion, expanded by
// hand (no Eigen geometry module).
inline Mat3 random_rotation(Rng& rng) {
  double w = gaussian(rng), x = gaussian(rng), y = gaussian(rng), z = gaussian(rng);
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n; x /= n; y /= n; z /= n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

// Random orthonormal pair (a, b).
inline std::pair<Vec3, Vec3> random_frame(Rng& rng) {
  const Vec3 a = random_unit(rng);
  Vec3 b = random_unit(rng);
  b = b - b.dot(a) * a;
  return {a, b / b.norm()};
}

// Area-weighted uniform samples on a box surface (box frame given by R, c).
inline std::vector<Vec3> sample_box_surface(Rng& rng, const Vec3& half, const Mat3& r,
                                            const Vec3& c, int n) {
  const double ax = half.y() * half.z(), ay = half.x() * half.z(), az = half.x() * half.y();
  const double total = ax + ay + az;
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    const int axis = pick < ax ? 0 : (pick < ax + ay ? 1 : 2);
    Vec3 p;
    for (int k = 0; k < 3; ++k) p[k] = rng.uniform(-half[k], half[k]);
    p[axis] = rng.uniform() < 0.5 ? -half[axis] : half[axis];
    pts.push_back(c + r * p);
  }
  return pts;
}

inline Mat3 covariance(const std::vector<Vec3>& pts) {
  Vec3 m = Vec3::Zero();
  for (const auto& p : pts) m += p;
  m /= static_cast<double>(pts.size());
  Mat3 c = Mat3::Zero();
  for (const auto& p : pts) c += (p - m) * (p - m).transpose();
  return c / static_cast<double>(pts.size());
}

// Dominant eigenvector of a symmetric PSD matrix by power iteration.
inline Vec3 power_iteration(const Mat3& m, int iters = 2000) {
  Vec3 v(0.57, 0.61, 0.55);
  for (int i = 0; i < iters; ++i) {
    const Vec3 w = m * v;
    if (w.norm() == 0) break;
    v = w / w.norm();
  }
  return v;
}

// Largest and smallest eigenvectors (the latter via the shifted matrix).
inline std::pair<Vec3, Vec3> extreme_eigenvectors(const Mat3& c) {
  const Vec3 big = power_iteration(c);
  const double lambda = big.dot(c * big);
  const Vec3 small = power_iteration(lambda * Mat3::Identity() - c);
  return {big, small};
}

// Exact overlap test for two boxes by enumerating candidate vertices of the
// intersection polytope: every triple of the 12 bounding planes is solved and
// the intersection point tested against all 12 half-spaces.
inline bool boxes_overlap_by_vertices(const Obb& p, const Obb& q, double tol = 1e-12) {
  std::array<Vec3, 12> normals;
  std::array<double, 12> offsets;
  int k = 0;
  for (const Obb* b : {&p, &q}) {
    for (int i = 0; i < 3; ++i) {
      const Vec3 a = b->rotation.col(i);
      normals[k] = a;
      offsets[k++] = a.dot(b->center) + b->half_extents[i];
      normals[k] = -a;
      offsets[k++] = -a.dot(b->center) + b->half_extents[i];
    }
  }
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) {
      for (int l = j + 1; l < 12; ++l) {
        Mat3 m;
        m.row(0) = normals[i];
        m.row(1) = normals[j];
        m.row(2) = normals[l];
        const double det = m.determinant();
        if (std::abs(det) < 1e-12) continue;
        const Vec3 x = m.inverse() * Vec3(offsets[i], offsets[j], offsets[l]);
        bool inside = true;
        for (int h = 0; h < 12 && inside; ++h) {
          if (normals[h].dot(x) > offsets[h] + tol) inside = false;
        }
        if (inside) return true;
      }
    }
  }
  return false;
}

// Monte-Carlo style check: grid points of p's volume tested inside q and vice
// versa. Can miss thin overlaps; used only as a secondary check.
inline bool boxes_overlap_by_sampling(const Obb& p, const Obb& q, int n = 9) {
  for (const auto& [a, b] : {std::pair{&p, &q}, std::pair{&q, &p}}) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          const Vec3 u(-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1),
                       -1.0 + 2.0 * k / (n - 1));
          const Vec3 x = a->center + a->rotation * u.cwiseProduct(a->half_extents);
          const Vec3 local = b->rotation.transpose() * (x - b->center);
          if ((local.cwiseAbs() - b->half_extents).maxCoeff() <= 0) return true;
        }
      }
    }
  }
  return false;
}

inline Obb grown(const Obb& b, double margin) {
  Obb out = b;
  out.half_extents = (b.half_extents.array() + margin).matrix();
  return out;
}

// Random near-contact box pair: random sizes and orientations, centers placed
// so the boxes are close to touching.
inline std::pair<Obb, Obb> random_near_contact_pair(Rng& rng) {
  Obb p, q;
  for (Obb* b : {&p, &q}) {
    b->half_extents = Vec3(rng.uniform(0.01, 0.15), rng.uniform(0.01, 0.15),
                           rng.uniform(0.01, 0.15));
    b->rotation = random_rotation(rng);
  }
  p.center = Vec3::Zero();
  const Vec3 dir = random_unit(rng);
  const double reach = p.half_extents.norm() + q.half_extents.norm();
  q.center = dir * rng.uniform(0.2, 1.0) * reach;
  return {p, q};
}

}  // namespace goalpose::oracle

#endif  // GOALPOSE_TESTS_SUPPORT_ORACLES_HPP_
