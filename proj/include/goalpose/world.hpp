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

#ifndef GOALPOSE_WORLD_HPP_
#define GOALPOSE_WORLD_HPP_

// Deterministic kinematic tabletop simulator. The gripper is a floating
// end-effector that is teleported along straight-line paths; objects move
// only when grasped, when released (drop to support), when toppled by a
// sweep, or through the drawer joint.

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "goalpose/error.hpp"
#include "goalpose/geometry.hpp"
#include "goalpose/rng.hpp"
#include "goalpose/task.hpp"

namespace goalpose {

enum class ObjectKind { kRigid, kDrawer };

struct SimObject {
  std::string id;
  std::vector<std::string> part_labels;
  Obb obb;
  std::vector<Vec3> surface_points;
  bool grasped = false;
  ObjectKind kind = ObjectKind::kRigid;
  bool fixed = false;    // never moves (cabinet)
  bool graspable = true;
  bool toppled = false;
  std::array<std::uint8_t, 3> color = {128, 128, 128};
};

// Gripper pose. `longitudinal` points from the palm toward the fingertips,
// `binormal` is the finger closing direction. `position` is the fingertip
// center (tool center point).
struct GripperState {
  Vec3 position = Vec3(0.40, 0.0, 0.35);
  UnitVec3 longitudinal = UnitVec3::from_unit(-Vec3::UnitZ());
  UnitVec3 binormal = UnitVec3::from_unit(Vec3::UnitY());
  bool closed = false;
  std::optional<std::string> attached_object;
  // Object pose expressed in the gripper frame, frozen at grasp time.
  Mat3 attach_rotation = Mat3::Identity();
  Vec3 attach_offset = Vec3::Zero();
};

inline const UnitVec3& initial_gripper_longitudinal() {
  static const UnitVec3 v = UnitVec3::from_unit(-Vec3::UnitZ());
  return v;
}
inline const UnitVec3& initial_gripper_binormal() {
  static const UnitVec3 v = UnitVec3::from_unit(Vec3::UnitY());
  return v;
}

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct DrawerJoint {
  Vec3 axis = -Vec3::UnitX();  // opening direction, unit
  double position = 0.0;       // m of travel
  double lower = 0.0;
  double upper = 0.20;
  // Closed (position = 0) centers of the objects riding on the joint.
  std::map<std::string, Vec3> closed_centers;
};

// Simulator constants shared by every task.
struct SimParams {
  double grasp_radius = 0.03;
  double perpendicular_tolerance_deg = 20.0;
  int substeps = 50;
  double open_width = 0.08;           // inner finger gap when open
  double finger_length = 0.05;
  double finger_thickness = 0.01;
  double finger_depth = 0.02;
  double palm_height = 0.02;
  double topple_depth = 0.005;        // penetration that knocks over a tall object
  double halt_depth = 0.001;          // penetration into table/fixtures that stops motion
  double table_z = 0.0;
  int surface_grid = 5;               // points per face edge
};

struct WorldState {
  std::vector<SimObject> objects;
  GripperState gripper;
  TaskSpec task;
  std::uint64_t seed = 0;
  int round = 0;
  Aabb workspace{Vec3(0.10, -0.50, 0.0), Vec3(0.90, 0.50, 0.60)};
  std::optional<DrawerJoint> drawer;
  SimParams params;

  const SimObject* find(std::string_view id) const {
    for (const auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
  SimObject* find(std::string_view id) {
    for (auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
  const SimObject& at(std::string_view id) const {
    const SimObject* o = find(id);
    if (o == nullptr) throw Error(Errc::kInvalidArgument, "no object " + std::string(id));
    return *o;
  }
};

struct CollisionEvent {
  std::string object_id;
  double depth = 0.0;  // m
  bool operator==(const CollisionEvent&) const = default;
};

struct GraspChange {
  enum class Kind { kNone, kGrasped, kReleased };
  Kind kind = Kind::kNone;
  std::string object_id;
  bool operator==(const GraspChange&) const = default;
};

struct StepOutcome {
  bool reached = true;
  std::vector<CollisionEvent> collision_events;
  GraspChange grasp_change;
  std::vector<std::string> toppled;
  bool operator==(const StepOutcome&) const = default;
};

// The executable goal parsed from a model response.
struct GripperGoal {
  Vec3 position = Vec3::Zero();
  UnitVec3 longitudinal = UnitVec3::from_unit(-Vec3::UnitZ());
  UnitVec3 binormal = UnitVec3::from_unit(Vec3::UnitY());
  bool close = false;
};

// ---------------------------------------------------------------------------

namespace detail {

inline Mat3 yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

// Cell-centered grid on each face, the same count on every face.
inline std::vector<Vec3> local_surface_grid(const Vec3& half, int k) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(6 * k * k));
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (double side : {-1.0, 1.0}) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          Vec3 p;
          p[axis] = side * half[axis];
          p[u] = (-1.0 + (2.0 * i + 1.0) / k) * half[u];
          p[v] = (-1.0 + (2.0 * j + 1.0) / k) * half[v];
          pts.push_back(p);
        }
      }
    }
  }
  return pts;
}

}  // namespace detail

inline void refresh_surface_points(SimObject& o, int grid) {
  o.surface_points = detail::local_surface_grid(o.obb.half_extents, grid);
  for (Vec3& p : o.surface_points) p = o.obb.center + o.obb.rotation * p;
}

// Gripper frame columns (longitudinal, binormal, longitudinal x binormal).
inline Mat3 gripper_frame(const UnitVec3& l, const UnitVec3& b) {
  Mat3 m;
  m.col(0) = l.vec();
  m.col(1) = b.vec();
  m.col(2) = l.vec().cross(b.vec());
  return m;
}

inline Mat3 gripper_frame(const GripperState& g) {
  return gripper_frame(g.longitudinal, g.binormal);
}

// Finger (x2) and palm boxes for a gripper pose with the given inner gap.
inline std::array<Obb, 3> gripper_boxes(const Vec3& tcp, const Mat3& frame,
                                        double gap, const SimParams& p) {
  const Vec3 l = frame.col(0);
  const Vec3 b = frame.col(1);
  std::array<Obb, 3> boxes;
  const Vec3 finger_half(p.finger_length / 2, p.finger_thickness / 2,
                         p.finger_depth / 2);
  for (int s = 0; s < 2; ++s) {
    const double side = s == 0 ? -1.0 : 1.0;
    boxes[s].center = tcp - l * (p.finger_length / 2) +
                      b * side * (gap / 2 + p.finger_thickness / 2);
    boxes[s].half_extents = finger_half;
    boxes[s].rotation = frame;
  }
  boxes[2].center = tcp - l * (p.finger_length + p.palm_height / 2);
  boxes[2].half_extents = Vec3(p.palm_height / 2,
                               p.open_width / 2 + p.finger_thickness,
                               p.finger_depth);
  boxes[2].rotation = frame;
  return boxes;
}

inline double finger_gap(const WorldState& w) {
  const GripperState& g = w.gripper;
  if (!g.closed) return w.params.open_width;
  if (!g.attached_object) return 0.0;
  const SimObject& o = w.at(*g.attached_object);
  return 2.0 * o.obb.support_radius(g.binormal.vec());
}

// ---------------------------------------------------------------------------
// Initialization

namespace detail {

inline SimObject make_box(std::string id, std::string part, const Vec3& center,
                          const Vec3& half, double yaw,
                          std::array<std::uint8_t, 3> color, int grid) {
  SimObject o;
  o.id = std::move(id);
  o.part_labels = {std::move(part)};
  o.obb.center = center;
  o.obb.half_extents = half;
  o.obb.rotation = yaw_rotation(yaw);
  o.color = color;
  refresh_surface_points(o, grid);
  return o;
}

// Rejection-samples an xy position inside [lo, hi] at least `clearance`
// (xy distance) away from every already placed object center.
inline Vec3 place_xy(Rng& rng, const Vec3& lo, const Vec3& hi, double z,
                     const std::vector<SimObject>& placed, double clearance) {
  Vec3 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), z);
  for (int attempt = 0; attempt < 256; ++attempt) {
    bool ok = true;
    for (const auto& o : placed) {
      if ((o.obb.center - p).head<2>().norm() < clearance) ok = false;
    }
    if (ok) return p;
    p = Vec3(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), z);
  }
  return p;
}

}  // namespace detail

// Placement ranges per task (xy lower/upper corners, meters).
struct PlacementRange {
  Vec3 lo;
  Vec3 hi;
};

inline PlacementRange lift_can_range() { return {Vec3(0.35, -0.15, 0), Vec3(0.55, 0.15, 0)}; }

// Builds the initial world. Everything random is drawn from `seed`.
inline WorldState world_init(const TaskSpec& task, std::uint64_t seed) {
  using detail::make_box;
  using detail::place_xy;
  WorldState w;
  w.task = task;
  w.seed = seed;
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(task.name) + 1);
  const int k = w.params.surface_grid;
  constexpr double kPi = std::numbers::pi;

  switch (task.name) {
    case TaskName::kLiftCan: {
      const Vec3 half(0.033, 0.033, 0.06);
      const auto r = lift_can_range();
      const Vec3 c = place_xy(rng, r.lo, r.hi, half.z(), w.objects, 0);
      w.objects.push_back(make_box("coke_can", "coke_can", c, half,
                                   rng.uniform(0, kPi / 2), {200, 30, 30}, k));
      break;
    }
    case TaskName::kMoveNear: {
      const Vec3 orange_half(0.02, 0.02, 0.02);
      const Vec3 sponge_half(0.035, 0.02, 0.012);
      const Vec3 can_half(0.033, 0.033, 0.06);
      const Vec3 s = place_xy(rng, Vec3(0.35, -0.16, 0), Vec3(0.50, -0.06, 0),
                              sponge_half.z(), w.objects, 0);
      w.objects.push_back(make_box("sponge", "sponge", s, sponge_half, 0.0,
                                   {60, 160, 220}, k));
      const Vec3 o = place_xy(rng, Vec3(0.35, 0.10, 0), Vec3(0.50, 0.20, 0),
                              orange_half.z(), w.objects, 0.15);
      w.objects.push_back(make_box("orange", "orange", o, orange_half,
                                   rng.uniform(-kPi / 4, kPi / 4),
                                   {245, 140, 20}, k));
      const Vec3 c = place_xy(rng, Vec3(0.60, -0.30, 0), Vec3(0.70, -0.20, 0),
                              can_half.z(), w.objects, 0.12);
      w.objects.push_back(make_box("coke_can", "coke_can", c, can_half,
                                   rng.uniform(0, kPi / 2), {200, 30, 30}, k));
      break;
    }
    case TaskName::kStackCube: {
      const Vec3 half(0.02, 0.02, 0.02);
      const Vec3 g = place_xy(rng, Vec3(0.35, 0.05, 0), Vec3(0.55, 0.20, 0),
                              half.z(), w.objects, 0);
      w.objects.push_back(make_box("green_cube", "green_cube", g, half,
                                   rng.uniform(-kPi / 4, kPi / 4),
                                   {40, 170, 60}, k));
      const Vec3 y = place_xy(rng, Vec3(0.35, -0.20, 0), Vec3(0.55, -0.05, 0),
                              half.z(), w.objects, 0.12);
      w.objects.push_back(make_box("yellow_cube", "yellow_cube", y, half,
                                   rng.uniform(-kPi / 4, kPi / 4),
                                   {230, 210, 40}, k));
      break;
    }
    case TaskName::kPutCarrotOnPlate: {
      const Vec3 carrot_half(0.06, 0.015, 0.015);
      const Vec3 plate_half(0.08, 0.08, 0.01);
      const Vec3 c = place_xy(rng, Vec3(0.35, 0.10, 0), Vec3(0.50, 0.20, 0),
                              carrot_half.z(), w.objects, 0);
      w.objects.push_back(make_box("carrot", "carrot", c, carrot_half,
                                   rng.uniform(-kPi / 2, kPi / 2),
                                   {240, 120, 30}, k));
      const Vec3 p = place_xy(rng, Vec3(0.40, -0.20, 0), Vec3(0.55, -0.10, 0),
                              plate_half.z(), w.objects, 0.2);
      w.objects.push_back(make_box("plate", "plate", p, plate_half, 0.0,
                                   {235, 235, 245}, k));
      break;
    }
    case TaskName::kPutSpoonOnTowel: {
      const Vec3 spoon_half(0.07, 0.012, 0.008);
      const Vec3 towel_half(0.08, 0.08, 0.004);
      const Vec3 s = place_xy(rng, Vec3(0.35, 0.10, 0), Vec3(0.50, 0.20, 0),
                              spoon_half.z(), w.objects, 0);
      w.objects.push_back(make_box("spoon", "spoon", s, spoon_half,
                                   rng.uniform(-kPi / 2, kPi / 2),
                                   {170, 170, 180}, k));
      const Vec3 t = place_xy(rng, Vec3(0.40, -0.20, 0), Vec3(0.55, -0.10, 0),
                              towel_half.z(), w.objects, 0.2);
      w.objects.push_back(make_box("towel", "towel", t, towel_half,
                                   rng.uniform(-kPi / 8, kPi / 8),
                                   {90, 90, 200}, k));
      break;
    }
    case TaskName::kDrawerOpen:
    case TaskName::kDrawerClose: {
      const Vec3 cabinet_half(0.15, 0.20, 0.15);
      const Vec3 cabinet(rng.uniform(0.68, 0.74), rng.uniform(-0.10, 0.10),
                         cabinet_half.z());
      const double front_x = cabinet.x() - cabinet_half.x();
      const Vec3 drawer_half(0.14, 0.18, 0.04);
      const Vec3 drawer(front_x + drawer_half.x(), cabinet.y(), 0.20);
      const Vec3 handle_half(0.008, 0.05, 0.008);
      const Vec3 handle(front_x - 0.07, cabinet.y(), 0.20);

      SimObject cab = make_box("cabinet", "cabinet", cabinet, cabinet_half, 0.0,
                               {150, 110, 70}, k);
      cab.fixed = true;
      cab.graspable = false;
      SimObject body = make_box("drawer", "drawer_body", drawer, drawer_half,
                                0.0, {185, 145, 95}, k);
      body.kind = ObjectKind::kDrawer;
      body.graspable = false;
      SimObject hdl = make_box("handle", "drawer_handle", handle, handle_half,
                               0.0, {60, 60, 60}, k);
      hdl.kind = ObjectKind::kDrawer;
      DrawerJoint joint;
      joint.closed_centers = {{"drawer", drawer}, {"handle", handle}};
      joint.position = task.name == TaskName::kDrawerClose
                           ? rng.uniform(0.14, 0.18)
                           : 0.0;
      body.obb.center = drawer + joint.axis * joint.position;
      hdl.obb.center = handle + joint.axis * joint.position;
      refresh_surface_points(body, k);
      refresh_surface_points(hdl, k);
      w.objects = {std::move(cab), std::move(body), std::move(hdl)};
      w.drawer = joint;
      break;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Success predicates

namespace detail {

// `top` rests on `base`: xy center inside the (scaled) base footprint and the
// bottom/top faces within `gap`.
inline bool rests_on(const SimObject& top, const SimObject& base, double fraction,
                     double gap) {
  if (top.grasped) return false;
  const Vec3 local = base.obb.to_local(top.obb.center);
  const Vec3& h = base.obb.half_extents;
  if (std::abs(local.x()) > fraction * h.x() ||
      std::abs(local.y()) > fraction * h.y()) {
    return false;
  }
  return std::abs(top.obb.min_z() - base.obb.max_z()) <= gap;
}

}  // namespace detail

inline bool evaluate_success(const WorldState& w) {
  const TaskParams& p = w.task.params;
  switch (w.task.name) {
    case TaskName::kLiftCan: {
      const SimObject& can = w.at("coke_can");
      return can.grasped &&
             can.obb.center.z() >= w.params.table_z + p.lift_height;
    }
    case TaskName::kMoveNear: {
      const SimObject& src = w.at("orange");
      const SimObject& dst = w.at("sponge");
      return !src.grasped && !src.toppled && !dst.toppled &&
             (src.obb.center - dst.obb.center).head<2>().norm() <= p.near_distance;
    }
    case TaskName::kStackCube:
      return detail::rests_on(w.at("green_cube"), w.at("yellow_cube"),
                              p.footprint_fraction, p.support_gap);
    case TaskName::kPutCarrotOnPlate:
      return detail::rests_on(w.at("carrot"), w.at("plate"),
                              p.footprint_fraction, p.support_gap);
    case TaskName::kPutSpoonOnTowel:
      return detail::rests_on(w.at("spoon"), w.at("towel"),
                              p.footprint_fraction, p.support_gap);
    case TaskName::kDrawerOpen:
      return w.drawer && w.drawer->position >= p.drawer_open_min;
    case TaskName::kDrawerClose:
      return w.drawer && w.drawer->position <= p.drawer_close_max;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Goal execution

namespace detail {

inline void place_attached(WorldState& w, SimObject& o) {
  const GripperState& g = w.gripper;
  const Mat3 frame = gripper_frame(g);
  o.obb.rotation = frame * g.attach_rotation;
  o.obb.center = g.position + frame * g.attach_offset;
  refresh_surface_points(o, w.params.surface_grid);
}

inline void set_drawer_position(WorldState& w, double q) {
  DrawerJoint& j = *w.drawer;
  j.position = std::clamp(q, j.lower, j.upper);
  for (const auto& [id, closed] : j.closed_centers) {
    SimObject& o = *w.find(id);
    o.obb.center = closed + j.axis * j.position;
    refresh_surface_points(o, w.params.surface_grid);
  }
}

// Object long axis candidates: obb axes whose half extent ties the maximum.
inline bool lateral_perpendicular(const SimObject& o, const Vec3& binormal,
                                  double tol_deg) {
  const double max_half = o.obb.half_extents.maxCoeff();
  const double limit = std::sin(tol_deg * std::numbers::pi / 180.0);
  for (int i = 0; i < 3; ++i) {
    if (o.obb.half_extents[i] < max_half - 1e-9) continue;
    if (std::abs(o.obb.axis(i).dot(binormal)) <= limit) return true;
  }
  return false;
}

inline bool is_standing(const SimObject& o) {
  const double height = 2.0 * o.obb.support_radius(Vec3::UnitZ());
  const double width =
      2.0 * std::min(o.obb.support_radius(Vec3::UnitX()),
                     o.obb.support_radius(Vec3::UnitY()));
  return height > 1.2 * width;
}

// Highest support surface under `o`'s footprint that lies below its bottom.
inline double support_height(const WorldState& w, const SimObject& o) {
  const Vec3 half_xy(o.obb.support_radius(Vec3::UnitX()),
                     o.obb.support_radius(Vec3::UnitY()), 0);
  double best = w.params.table_z;
  const double bottom = o.obb.min_z();
  for (const auto& other : w.objects) {
    if (&other == &o) continue;
    const Vec3 oh(other.obb.support_radius(Vec3::UnitX()),
                  other.obb.support_radius(Vec3::UnitY()), 0);
    const Vec3 d = (other.obb.center - o.obb.center).cwiseAbs();
    if (d.x() >= half_xy.x() + oh.x() || d.y() >= half_xy.y() + oh.y()) continue;
    const double top = other.obb.max_z();
    if (top <= bottom + 1e-9) best = std::max(best, top);
  }
  return best;
}

inline void topple(WorldState& w, SimObject& o, const Vec3& sweep_dir) {
  int long_axis = 0;
  o.obb.half_extents.maxCoeff(&long_axis);
  Vec3 d(sweep_dir.x(), sweep_dir.y(), 0.0);
  d = d.norm() > 1e-12 ? d.normalized() : Vec3::UnitX();
  Mat3 r;
  r.col(long_axis) = d;
  r.col((long_axis + 1) % 3) = Vec3::UnitZ();
  r.col((long_axis + 2) % 3) = d.cross(Vec3::UnitZ());
  if (r.determinant() < 0) r.col((long_axis + 2) % 3) *= -1.0;
  const double height = 2.0 * o.obb.support_radius(Vec3::UnitZ());
  o.obb.rotation = r;
  o.obb.center += d * (height / 2.0);
  o.obb.center.z() = w.params.table_z + o.obb.half_extents[(long_axis + 1) % 3];
  o.toppled = true;
  refresh_surface_points(o, w.params.surface_grid);
}

inline void record_collision(StepOutcome& out, const std::string& id, double depth) {
  for (auto& e : out.collision_events) {
    if (e.object_id == id) {
      e.depth = std::max(e.depth, depth);
      return;
    }
  }
  out.collision_events.push_back({id, depth});
}

}  // namespace detail

// Moves the gripper to `goal` along a straight line (orientation slerped),
// checking collisions at every sub-step, then applies the open/close flag.
inline StepOutcome apply_goal(WorldState& w, const GripperGoal& goal) {
  const Vec3& gl = goal.longitudinal;
  const Vec3& gb = goal.binormal;
  if (std::abs(gl.dot(gb)) > kFrameTolerance || !all_finite(goal.position)) {
    throw Error(Errc::kInvalidGoalAxes, "goal axes are not orthonormal");
  }
  if (!w.workspace.contains(goal.position)) {
    throw Error(Errc::kOutOfWorkspace, "goal position outside workspace");
  }

  StepOutcome out;
  GripperState& g = w.gripper;
  SimObject* held = g.attached_object ? w.find(*g.attached_object) : nullptr;
  const bool drawer_held = held != nullptr && held->kind == ObjectKind::kDrawer;

  const Vec3 start_pos = g.position;
  const Mat3 start_frame = gripper_frame(g);
  Vec3 target_pos = goal.position;
  // Rotation taking the start-pose axis pair to the requested one.
  const RotationMatrix goal_rotation = rotation_from_axis_goal(
      goal.longitudinal, goal.binormal, initial_gripper_longitudinal(),
      initial_gripper_binormal());
  Mat3 target_frame =
      goal_rotation.matrix() * gripper_frame(initial_gripper_longitudinal(),
                                             initial_gripper_binormal());
  double drawer_start = 0.0;
  if (drawer_held) {
    // The drawer constrains the hand to its joint line and orientation.
    const DrawerJoint& j = *w.drawer;
    drawer_start = j.position;
    const double dq = (goal.position - start_pos).dot(j.axis);
    const double q = std::clamp(j.position + dq, j.lower, j.upper);
    target_pos = start_pos + j.axis * (q - j.position);
    target_frame = start_frame;
  }

  const Eigen::Quaterniond q0(start_frame);
  const Eigen::Quaterniond q1(target_frame);
  const double gap = finger_gap(w);
  const int steps = std::max(1, w.params.substeps);
  Vec3 prev_pos = start_pos;
  Mat3 prev_frame = start_frame;
  bool halted = false;

  for (int s = 1; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const Vec3 pos = start_pos + t * (target_pos - start_pos);
    const Mat3 frame = q0.slerp(t, q1).toRotationMatrix();

    g.position = pos;
    g.longitudinal = UnitVec3::normalize(frame.col(0));
    g.binormal = UnitVec3::normalize(frame.col(1));
    if (drawer_held) {
      detail::set_drawer_position(w, drawer_start + (pos - start_pos).dot(w.drawer->axis));
    } else if (held != nullptr) {
      detail::place_attached(w, *held);
    }

    std::vector<Obb> moving;
    for (const Obb& b : gripper_boxes(pos, frame, gap, w.params)) moving.push_back(b);
    if (held != nullptr && !drawer_held) moving.push_back(held->obb);

    bool blocked = false;
    for (const Obb& m : moving) {
      const double below = w.params.table_z - m.min_z();
      if (below > 0.0) detail::record_collision(out, "table", below);
      if (below > w.params.halt_depth) blocked = true;
    }
    const Vec3 sweep = pos - prev_pos;
    for (SimObject& o : w.objects) {
      if (held != nullptr && &o == held) continue;
      if (drawer_held && o.kind == ObjectKind::kDrawer) continue;
      double depth = -1.0;
      for (const Obb& m : moving) depth = std::max(depth, obb_overlap_depth(m, o.obb));
      if (depth <= 0.0) continue;
      detail::record_collision(out, o.id, depth);
      if (o.fixed && depth > w.params.halt_depth) blocked = true;
      if (!o.fixed && o.kind == ObjectKind::kRigid && !o.toppled &&
          depth > w.params.topple_depth && sweep.head<2>().norm() > 1e-9 &&
          detail::is_standing(o)) {
        detail::topple(w, o, sweep);
        out.toppled.push_back(o.id);
      }
    }
    if (blocked) {
      // Back off to the last admissible sub-step.
      g.position = prev_pos;
      g.longitudinal = UnitVec3::normalize(prev_frame.col(0));
      g.binormal = UnitVec3::normalize(prev_frame.col(1));
      if (drawer_held) {
        detail::set_drawer_position(w, drawer_start + (prev_pos - start_pos).dot(w.drawer->axis));
      } else if (held != nullptr) {
        detail::place_attached(w, *held);
      }
      halted = true;
      break;
    }
    prev_pos = pos;
    prev_frame = frame;
  }

  // Land exactly on the target to avoid slerp round-off accumulating.
  if (!halted) {
    g.position = target_pos;
    g.longitudinal = UnitVec3::normalize(target_frame.col(0));
    g.binormal = UnitVec3::normalize(target_frame.col(1));
    if (drawer_held) {
      detail::set_drawer_position(w, drawer_start + (target_pos - start_pos).dot(w.drawer->axis));
    } else if (held != nullptr) {
      detail::place_attached(w, *held);
    }
  }
  out.reached = !halted && (g.position - goal.position).norm() <= 1e-9 &&
                (g.longitudinal.vec() - goal.longitudinal.vec()).norm() <= 1e-6 &&
                (g.binormal.vec() - goal.binormal.vec()).norm() <= 1e-6;

  if (goal.close && !g.closed) {
    g.closed = true;
    const Mat3 frame = gripper_frame(g);
    SimObject* best = nullptr;
    double best_distance = w.params.grasp_radius;
    for (SimObject& o : w.objects) {
      if (o.fixed || o.toppled || !o.graspable) continue;
      const double d = o.obb.distance_to(g.position);
      if (d > best_distance) continue;
      if (!detail::lateral_perpendicular(o, g.binormal.vec(),
                                         w.params.perpendicular_tolerance_deg)) {
        continue;
      }
      if (2.0 * o.obb.support_radius(g.binormal.vec()) > w.params.open_width) continue;
      if (best == nullptr || d < best_distance) {
        best = &o;
        best_distance = d;
      }
    }
    if (best != nullptr) {
      best->grasped = true;
      g.attached_object = best->id;
      g.attach_rotation = frame.transpose() * best->obb.rotation;
      g.attach_offset = frame.transpose() * (best->obb.center - g.position);
      out.grasp_change = {GraspChange::Kind::kGrasped, best->id};
    }
  } else if (!goal.close && g.closed) {
    g.closed = false;
    if (held != nullptr) {
      held->grasped = false;
      if (held->kind == ObjectKind::kRigid) {
        const double drop = held->obb.min_z() - detail::support_height(w, *held);
        held->obb.center.z() -= std::max(0.0, drop);
        refresh_surface_points(*held, w.params.surface_grid);
      }
      out.grasp_change = {GraspChange::Kind::kReleased, held->id};
      g.attached_object.reset();
      g.attach_rotation = Mat3::Identity();
      g.attach_offset = Vec3::Zero();
    }
  }
  ++w.round;
  return out;
}

// ---------------------------------------------------------------------------
// Scene information

struct ObjectPartState {
  std::string label;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Zero();  // (length, width, height) along (l, b, n)
  AxisTriple axes;
};

struct GripperPartState {
  Vec3 position = Vec3::Zero();
  UnitVec3 longitudinal;
  UnitVec3 binormal;
  bool closed = false;
};

struct SceneInfo {
  std::vector<ObjectPartState> parts;
  GripperPartState gripper;
};

// One entry per object part. Axes come from PCA over the sampled surface
// points; center and size from the ground-truth box.
inline SceneInfo scene_snapshot(const WorldState& w) {
  SceneInfo scene;
  for (const SimObject& o : w.objects) {
    for (const std::string& label : o.part_labels) {
      ObjectPartState part;
      part.label = label;
      part.center = o.obb.center;
      part.axes = principal_axes(o.surface_points);
      const std::array<Vec3, 3> pca = {part.axes.longitudinal.vec(),
                                       part.axes.binormal.vec(),
                                       part.axes.normal.vec()};
      std::array<bool, 3> used = {false, false, false};
      for (int a = 0; a < 3; ++a) {
        int best = -1;
        for (int i = 0; i < 3; ++i) {
          if (used[i]) continue;
          if (best < 0 || std::abs(o.obb.axis(i).dot(pca[a])) >
                              std::abs(o.obb.axis(best).dot(pca[a])) + 1e-12) {
            best = i;
          }
        }
        used[best] = true;
        part.size[a] = 2.0 * o.obb.half_extents[best];
      }
      scene.parts.push_back(std::move(part));
    }
  }
  scene.gripper = {w.gripper.position, w.gripper.longitudinal, w.gripper.binormal,
                   w.gripper.closed};
  return scene;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(Errc::kInvalidArgument, "expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json mat_json(const Mat3& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return rows;
}

inline Mat3 json_mat(const nlohmann::json& j) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

inline void to_json(nlohmann::json& j, const GripperGoal& g) {
  j = {{"position", vec_json(g.position)},
       {"longitudinal", vec_json(g.longitudinal)},
       {"binormal", vec_json(g.binormal)},
       {"close", g.close}};
}

inline void from_json(const nlohmann::json& j, GripperGoal& g) {
  g.position = json_vec(j.at("position"));
  g.longitudinal = UnitVec3::from_unit(json_vec(j.at("longitudinal")));
  g.binormal = UnitVec3::from_unit(json_vec(j.at("binormal")));
  g.close = j.at("close").get<bool>();
}

inline void to_json(nlohmann::json& j, const StepOutcome& s) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : s.collision_events) {
    events.push_back({{"object", e.object_id}, {"depth", e.depth}});
  }
  std::string kind = "none";
  if (s.grasp_change.kind == GraspChange::Kind::kGrasped) kind = "grasped";
  if (s.grasp_change.kind == GraspChange::Kind::kReleased) kind = "released";
  j = {{"reached", s.reached},
       {"collision_events", events},
       {"grasp_change", {{"kind", kind}, {"object", s.grasp_change.object_id}}},
       {"toppled", s.toppled}};
}

inline void from_json(const nlohmann::json& j, StepOutcome& s) {
  s.reached = j.at("reached").get<bool>();
  s.collision_events.clear();
  for (const auto& e : j.at("collision_events")) {
    s.collision_events.push_back({e.at("object").get<std::string>(),
                                  e.at("depth").get<double>()});
  }
  const std::string kind = j.at("grasp_change").at("kind").get<std::string>();
  s.grasp_change.kind = kind == "grasped"    ? GraspChange::Kind::kGrasped
                        : kind == "released" ? GraspChange::Kind::kReleased
                                             : GraspChange::Kind::kNone;
  s.grasp_change.object_id = j.at("grasp_change").at("object").get<std::string>();
  s.toppled = j.at("toppled").get<std::vector<std::string>>();
}

inline constexpr const char* kWorldSchema = "goalpose.world/1";

inline nlohmann::json world_to_json(const WorldState& w) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : w.objects) {
    objects.push_back({{"id", o.id},
                       {"part_labels", o.part_labels},
                       {"center", vec_json(o.obb.center)},
                       {"half_extents", vec_json(o.obb.half_extents)},
                       {"rotation", mat_json(o.obb.rotation)},
                       {"grasped", o.grasped},
                       {"kind", o.kind == ObjectKind::kDrawer ? "drawer" : "rigid"},
                       {"fixed", o.fixed},
                       {"graspable", o.graspable},
                       {"toppled", o.toppled},
                       {"color", o.color}});
  }
  const GripperState& g = w.gripper;
  nlohmann::json gripper = {
      {"position", vec_json(g.position)},
      {"longitudinal", vec_json(g.longitudinal)},
      {"binormal", vec_json(g.binormal)},
      {"closed", g.closed},
      {"attached_object", g.attached_object ? nlohmann::json(*g.attached_object)
                                            : nlohmann::json(nullptr)},
      {"attach_rotation", mat_json(g.attach_rotation)},
      {"attach_offset", vec_json(g.attach_offset)}};
  nlohmann::json drawer = nullptr;
  if (w.drawer) {
    nlohmann::json centers = nlohmann::json::object();
    for (const auto& [id, c] : w.drawer->closed_centers) centers[id] = vec_json(c);
    drawer = {{"axis", vec_json(w.drawer->axis)},
              {"position", w.drawer->position},
              {"lower", w.drawer->lower},
              {"upper", w.drawer->upper},
              {"closed_centers", centers}};
  }
  const SimParams& p = w.params;
  return {{"schema", kWorldSchema},
          {"task", w.task},
          {"seed", w.seed},
          {"round", w.round},
          {"workspace", {{"min", vec_json(w.workspace.min)},
                         {"max", vec_json(w.workspace.max)}}},
          {"objects", objects},
          {"gripper", gripper},
          {"drawer", drawer},
          {"params", {{"grasp_radius", p.grasp_radius},
                      {"perpendicular_tolerance_deg", p.perpendicular_tolerance_deg},
                      {"substeps", p.substeps},
                      {"open_width", p.open_width},
                      {"finger_length", p.finger_length},
                      {"finger_thickness", p.finger_thickness},
                      {"finger_depth", p.finger_depth},
                      {"palm_height", p.palm_height},
                      {"topple_depth", p.topple_depth},
                      {"halt_depth", p.halt_depth},
                      {"table_z", p.table_z},
                      {"surface_grid", p.surface_grid}}}};
}

inline WorldState world_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kWorldSchema) {
    throw Error(Errc::kSchemaViolation, "unsupported world schema");
  }
  WorldState w;
  const auto& p = j.at("params");
  w.params.grasp_radius = p.at("grasp_radius");
  w.params.perpendicular_tolerance_deg = p.at("perpendicular_tolerance_deg");
  w.params.substeps = p.at("substeps");
  w.params.open_width = p.at("open_width");
  w.params.finger_length = p.at("finger_length");
  w.params.finger_thickness = p.at("finger_thickness");
  w.params.finger_depth = p.at("finger_depth");
  w.params.palm_height = p.at("palm_height");
  w.params.topple_depth = p.at("topple_depth");
  w.params.halt_depth = p.at("halt_depth");
  w.params.table_z = p.at("table_z");
  w.params.surface_grid = p.at("surface_grid");
  w.task = j.at("task").get<TaskSpec>();
  w.seed = j.at("seed").get<std::uint64_t>();
  w.round = j.at("round").get<int>();
  w.workspace = {json_vec(j.at("workspace").at("min")),
                 json_vec(j.at("workspace").at("max"))};
  for (const auto& jo : j.at("objects")) {
    SimObject o;
    o.id = jo.at("id");
    o.part_labels = jo.at("part_labels").get<std::vector<std::string>>();
    o.obb.center = json_vec(jo.at("center"));
    o.obb.half_extents = json_vec(jo.at("half_extents"));
    o.obb.rotation = json_mat(jo.at("rotation"));
    o.grasped = jo.at("grasped");
    o.kind = jo.at("kind") == "drawer" ? ObjectKind::kDrawer : ObjectKind::kRigid;
    o.fixed = jo.at("fixed");
    o.graspable = jo.at("graspable");
    o.toppled = jo.at("toppled");
    o.color = jo.at("color").get<std::array<std::uint8_t, 3>>();
    refresh_surface_points(o, w.params.surface_grid);
    w.objects.push_back(std::move(o));
  }
  const auto& jg = j.at("gripper");
  w.gripper.position = json_vec(jg.at("position"));
  w.gripper.longitudinal = UnitVec3::from_unit(json_vec(jg.at("longitudinal")));
  w.gripper.binormal = UnitVec3::from_unit(json_vec(jg.at("binormal")));
  w.gripper.closed = jg.at("closed");
  if (!jg.at("attached_object").is_null()) {
    w.gripper.attached_object = jg.at("attached_object").get<std::string>();
  }
  w.gripper.attach_rotation = json_mat(jg.at("attach_rotation"));
  w.gripper.attach_offset = json_vec(jg.at("attach_offset"));
  if (!j.at("drawer").is_null()) {
    const auto& jd = j.at("drawer");
    DrawerJoint d;
    d.axis = json_vec(jd.at("axis"));
    d.position = jd.at("position");
    d.lower = jd.at("lower");
    d.upper = jd.at("upper");
    for (const auto& [id, c] : jd.at("closed_centers").items()) {
      d.closed_centers[id] = json_vec(c);
    }
    w.drawer = d;
  }
  return w;
}

}  // namespace goalpose

#endif  // GOALPOSE_WORLD_HPP_
