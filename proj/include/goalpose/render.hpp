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

#ifndef GOALPOSE_RENDER_HPP_
#define GOALPOSE_RENDER_HPP_

// Flat-shaded painter's-algorithm rasterizer for oriented boxes. Output is a
// pure function of (world, camera, options).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "goalpose/codec.hpp"
#include "goalpose/error.hpp"
#include "goalpose/geometry.hpp"
#include "goalpose/world.hpp"

namespace goalpose {

struct CameraSpec {
  Vec3 position = Vec3(-0.25, 0.0, 0.70);
  Vec3 look_at = Vec3(0.50, 0.0, 0.05);
  Vec3 up = Vec3::UnitZ();
  double vertical_fov_deg = 50.0;
  int width = 512;
  int height = 512;

  // Orbits the camera about the vertical axis through look_at.
  CameraSpec rotated_azimuth(double degrees) const {
    CameraSpec c = *this;
    const Mat3 r = Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0,
                                     Vec3::UnitZ()).toRotationMatrix();
    c.position = look_at + r * (position - look_at);
    return c;
  }
};

struct RenderOptions {
  bool draw_gripper = true;
  bool draw_table = true;
  std::array<std::uint8_t, 3> background = {214, 222, 230};
  std::array<std::uint8_t, 3> table_color = {196, 176, 150};
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Bytes to_png() const { return encode_png_rgb(rgb.data(), width, height); }
  bool operator==(const Image&) const = default;
};

// Camera-space basis; throws DegenerateCamera when position == look_at.
struct CameraBasis {
  Vec3 origin;
  Vec3 right;
  Vec3 up;
  Vec3 forward;
  double focal = 1.0;  // pixels
  double cx = 0.0;
  double cy = 0.0;

  explicit CameraBasis(const CameraSpec& cam) : origin(cam.position) {
    const Vec3 d = cam.look_at - cam.position;
    if (!(d.norm() > 1e-9) || cam.width <= 0 || cam.height <= 0 ||
        !(cam.vertical_fov_deg > 0.0 && cam.vertical_fov_deg < 180.0)) {
      throw Error(Errc::kDegenerateCamera, "camera position equals look-at");
    }
    forward = d.normalized();
    Vec3 up_hint = cam.up;
    if (forward.cross(up_hint).norm() < 1e-9) up_hint = Vec3::UnitX();
    right = forward.cross(up_hint).normalized();
    up = right.cross(forward);
    focal = (cam.height / 2.0) /
            std::tan(cam.vertical_fov_deg * std::numbers::pi / 360.0);
    cx = cam.width / 2.0;
    cy = cam.height / 2.0;
  }

  Vec3 to_camera(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {d.dot(right), d.dot(up), d.dot(forward)};
  }

  std::array<double, 2> to_pixel(const Vec3& c) const {
    return {cx + focal * c.x() / c.z(), cy - focal * c.y() / c.z()};
  }
};

// Pixel coordinates of a world point, empty when behind the camera.
inline std::optional<std::array<double, 2>> project_point(const CameraSpec& cam,
                                                          const Vec3& p) {
  const CameraBasis basis(cam);
  const Vec3 c = basis.to_camera(p);
  if (c.z() <= 1e-6) return std::nullopt;
  return basis.to_pixel(c);
}

namespace detail {

inline constexpr double kNearPlane = 0.01;

struct Face {
  std::array<Vec3, 4> corners;
  Vec3 normal;
  std::array<std::uint8_t, 3> color;
  double depth;
  int order;  // stable tie-break
};

inline std::vector<Vec3> clip_near(const std::vector<Vec3>& poly) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % poly.size()];
    const bool ain = a.z() >= kNearPlane;
    const bool bin = b.z() >= kNearPlane;
    if (ain) out.push_back(a);
    if (ain != bin) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

inline void fill_polygon(Image& img, const CameraBasis& basis,
                         const std::vector<Vec3>& cam_poly,
                         const std::array<std::uint8_t, 3>& color) {
  const std::vector<Vec3> poly = clip_near(cam_poly);
  if (poly.size() < 3) return;
  std::vector<std::array<double, 2>> px;
  px.reserve(poly.size());
  for (const Vec3& c : poly) px.push_back(basis.to_pixel(c));
  double area = 0.0;
  double minx = px[0][0], maxx = px[0][0], miny = px[0][1], maxy = px[0][1];
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto& a = px[i];
    const auto& b = px[(i + 1) % px.size()];
    area += a[0] * b[1] - b[0] * a[1];
    minx = std::min(minx, a[0]);
    maxx = std::max(maxx, a[0]);
    miny = std::min(miny, a[1]);
    maxy = std::max(maxy, a[1]);
  }
  if (std::abs(area) < 1e-12) return;
  const double sign = area > 0 ? 1.0 : -1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(maxx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(maxy)));
  for (int y = y0; y <= y1; ++y) {
    const double sy = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double sx = x + 0.5;
      bool inside = true;
      for (std::size_t i = 0; i < px.size() && inside; ++i) {
        const auto& a = px[i];
        const auto& b = px[(i + 1) % px.size()];
        const double e = (b[0] - a[0]) * (sy - a[1]) - (b[1] - a[1]) * (sx - a[0]);
        if (sign * e < 0) inside = false;
      }
      if (!inside) continue;
      std::uint8_t* p = &img.rgb[(static_cast<std::size_t>(y) * img.width + x) * 3];
      p[0] = color[0];
      p[1] = color[1];
      p[2] = color[2];
    }
  }
}

inline std::array<std::uint8_t, 3> shade(const std::array<std::uint8_t, 3>& base,
                                         const Vec3& normal) {
  static const Vec3 kLight = Vec3(0.3, -0.4, 1.0).normalized();
  const double k = 0.45 + 0.55 * std::max(0.0, normal.dot(kLight));
  std::array<std::uint8_t, 3> out;
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(base[i] * k), 0L, 255L));
  }
  return out;
}

inline void add_box_faces(std::vector<Face>& faces, const Obb& box,
                          const std::array<std::uint8_t, 3>& color,
                          const CameraBasis& basis) {
  const auto c = box.corners();  // bit i of the index selects +axis i
  static constexpr int kQuads[6][4] = {{0, 2, 6, 4}, {1, 5, 7, 3},
                                       {0, 4, 5, 1}, {2, 3, 7, 6},
                                       {0, 1, 3, 2}, {4, 6, 7, 5}};
  static constexpr int kAxis[6] = {0, 0, 1, 1, 2, 2};
  static constexpr double kSide[6] = {-1, 1, -1, 1, -1, 1};
  for (int f = 0; f < 6; ++f) {
    Face face;
    Vec3 centroid = Vec3::Zero();
    for (int i = 0; i < 4; ++i) {
      face.corners[i] = c[kQuads[f][i]];
      centroid += face.corners[i] / 4.0;
    }
    face.normal = box.axis(kAxis[f]) * kSide[f];
    if (face.normal.dot(centroid - basis.origin) >= 0) continue;  // back face
    face.color = shade(color, face.normal);
    face.depth = basis.to_camera(centroid).z();
    face.order = static_cast<int>(faces.size());
    faces.push_back(face);
  }
}

}  // namespace detail

inline Image render(const WorldState& w, const CameraSpec& camera,
                    const RenderOptions& options = {}) {
  const CameraBasis basis(camera);
  Image img;
  img.width = camera.width;
  img.height = camera.height;
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = options.background[0];
    img.rgb[i + 1] = options.background[1];
    img.rgb[i + 2] = options.background[2];
  }
  if (options.draw_table) {
    const double z = w.params.table_z;
    std::vector<Vec3> table = {Vec3(-0.2, -0.8, z), Vec3(1.2, -0.8, z),
                               Vec3(1.2, 0.8, z), Vec3(-0.2, 0.8, z)};
    for (Vec3& p : table) p = basis.to_camera(p);
    detail::fill_polygon(img, basis, table,
                         detail::shade(options.table_color, Vec3::UnitZ()));
  }

  std::vector<detail::Face> faces;
  for (const SimObject& o : w.objects) detail::add_box_faces(faces, o.obb, o.color, basis);
  if (options.draw_gripper) {
    const auto boxes = gripper_boxes(w.gripper.position, gripper_frame(w.gripper),
                                     finger_gap(w), w.params);
    for (const Obb& b : boxes) detail::add_box_faces(faces, b, {70, 70, 80}, basis);
  }
  std::stable_sort(faces.begin(), faces.end(),
                   [](const detail::Face& a, const detail::Face& b) {
                     if (a.depth != b.depth) return a.depth > b.depth;
                     return a.order < b.order;
                   });
  for (const auto& f : faces) {
    std::vector<Vec3> poly;
    for (const Vec3& p : f.corners) poly.push_back(basis.to_camera(p));
    detail::fill_polygon(img, basis, poly, f.color);
  }
  return img;
}

inline void to_json(nlohmann::json& j, const CameraSpec& c) {
  j = {{"position", vec_json(c.position)},
       {"look_at", vec_json(c.look_at)},
       {"up", vec_json(c.up)},
       {"vertical_fov_deg", c.vertical_fov_deg},
       {"width", c.width},
       {"height", c.height}};
}

inline void from_json(const nlohmann::json& j, CameraSpec& c) {
  c.position = json_vec(j.at("position"));
  c.look_at = json_vec(j.at("look_at"));
  if (j.contains("up")) c.up = json_vec(j.at("up"));
  c.vertical_fov_deg = j.value("vertical_fov_deg", c.vertical_fov_deg);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
}

}  // namespace goalpose

#endif  // GOALPOSE_RENDER_HPP_
