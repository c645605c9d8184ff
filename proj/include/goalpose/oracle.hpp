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

#ifndef GOALPOSE_ORACLE_HPP_
#define GOALPOSE_ORACLE_HPP_

// Scripted experts. Each round's goal is derived from the current world
// state and the round number, so the experts carry no memory between calls.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "goalpose/error.hpp"
#include "goalpose/policy.hpp"
#include "goalpose/protocol.hpp"
#include "goalpose/world.hpp"

namespace goalpose {

struct OracleStep {
  GripperGoal goal;
  std::string summary;  // one sentence for the templated reasoning
};

namespace oracle_detail {

inline constexpr double kHover = 0.10;      // above the object top
inline constexpr double kCarry = 0.20;      // tcp height while carrying
inline constexpr double kPlaceGap = 0.002;  // bottom clearance before release

inline const Vec3 kDown(0, 0, -1);

// Horizontal object axis the fingers should close along: perpendicular to the
// long axis, narrow enough for the open gripper, nearest the current binormal.
inline Vec3 closing_axis(const WorldState& w, const SimObject& o) {
  const Vec3 current = w.gripper.binormal;
  const double max_half = o.obb.half_extents.maxCoeff();
  Vec3 best = Vec3::Zero();
  double best_score = -2.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3 a = o.obb.axis(i);
    if (std::abs(a.z()) > 0.5) continue;  // not horizontal
    bool perpendicular = false;
    for (int j = 0; j < 3; ++j) {
      if (j != i && o.obb.half_extents[j] >= max_half - 1e-9) perpendicular = true;
    }
    if (!perpendicular) continue;
    if (2.0 * o.obb.half_extents[i] > w.params.open_width) continue;
    for (double s : {1.0, -1.0}) {
      const double score = current.dot(s * a);
      if (score > best_score + 1e-12) {
        best_score = score;
        best = s * a;
      }
    }
  }
  if (best_score < -1.5) throw Error(Errc::kOracleStuck, "no graspable closing axis on " + o.id);
  return Vec3(best.x(), best.y(), 0.0).normalized();
}

// +x or -x, whichever is nearer to v.
inline Vec3 nearest_x_axis(const Vec3& v) {
  Vec3 best = Vec3::UnitX();
  double best_dot = -2.0;
  for (const Vec3& a : {Vec3(1, 0, 0), Vec3(-1, 0, 0)}) {
    if (v.dot(a) > best_dot + 1e-12) {
      best_dot = v.dot(a);
      best = a;
    }
  }
  return best;
}

inline GripperGoal goal_at(const Vec3& p, const Vec3& binormal, bool close) {
  GripperGoal g;
  g.position = p;
  g.longitudinal = UnitVec3::from_unit(kDown);
  g.binormal = UnitVec3::normalize(binormal);
  g.close = close;
  return g;
}

// TCP height that puts the fingertips low on the object with the palm above
// its top face.
inline double grasp_height(const WorldState& w, const SimObject& o) {
  const double top = o.obb.max_z();
  return std::max(o.obb.center.z(),
                  top - w.params.finger_length + 0.01);
}

inline const SimObject& require(const WorldState& w, std::string_view id) {
  const SimObject& o = w.at(id);
  if (o.toppled) throw Error(Errc::kOracleStuck, o.id + " is toppled");
  return o;
}

inline void require_held(const WorldState& w, const std::string& id) {
  if (w.gripper.attached_object != id) {
    throw Error(Errc::kOracleStuck, "expected to be holding " + id);
  }
}

// Pick `src`, then put it so its bottom rests `kPlaceGap` above `support_top`
// at `place_xy`, with the gripper binormal `place_b` (nullopt: keep current).
inline OracleStep pick_and_place(const WorldState& w, int round, const std::string& src,
                                 const Vec3& place_xy, double support_top,
                                 std::optional<Vec3> place_b, const std::string& dst_name) {
  const Vec3 b_now = w.gripper.binormal;
  switch (round) {
    case 1: {
      const SimObject& o = require(w, src);
      const Vec3 c = o.obb.center;
      return {goal_at(Vec3(c.x(), c.y(), o.obb.max_z() + kHover), closing_axis(w, o), false),
              fmt::format("Hover above the {} with the fingers across its narrow side", src)};
    }
    case 2: {
      const SimObject& o = require(w, src);
      const Vec3 c = o.obb.center;
      return {goal_at(Vec3(c.x(), c.y(), grasp_height(w, o)), b_now, false),
              fmt::format("Descend so the {} sits between the fingers", src)};
    }
    case 3: {
      const Vec3 p = w.gripper.position;
      return {goal_at(p, b_now, true), fmt::format("Close the gripper on the {}", src)};
    }
    case 4: {
      require_held(w, src);
      const Vec3 p = w.gripper.position;
      return {goal_at(Vec3(p.x(), p.y(), kCarry), b_now, true),
              fmt::format("Lift the {} clear of the table", src)};
    }
    case 5: {
      require_held(w, src);
      const SimObject& o = w.at(src);
      const Vec3 offset = w.gripper.position - o.obb.center;
      const Vec3 b = place_b.value_or(b_now);
      return {goal_at(Vec3(place_xy.x() + offset.x(), place_xy.y() + offset.y(), kCarry), b, true),
              fmt::format("Carry the {} over the {}", src, dst_name)};
    }
    case 6: {
      require_held(w, src);
      const SimObject& o = w.at(src);
      const double lower = o.obb.min_z() - (support_top + kPlaceGap);
      const Vec3 p = w.gripper.position;
      return {goal_at(Vec3(p.x(), p.y(), p.z() - lower), b_now, true),
              fmt::format("Lower the {} until it almost touches the {}", src, dst_name)};
    }
    case 7: {
      require_held(w, src);
      return {goal_at(w.gripper.position, b_now, false),
              fmt::format("Open the gripper to release the {}", src)};
    }
    default:
      throw Error(Errc::kOracleStuck, fmt::format("round {} is past the plan", round));
  }
}

inline OracleStep drawer_step(const WorldState& w, int round, bool open) {
  if (!w.drawer) throw Error(Errc::kOracleStuck, "no drawer");
  const SimObject& handle = w.at("handle");
  const Vec3 h = handle.obb.center;
  const Vec3 b_now = w.gripper.binormal;
  switch (round) {
    case 1:
      return {goal_at(h + Vec3(0, 0, 0.08), closing_axis(w, handle), false),
              "Hover above the drawer handle with the fingers across the bar"};
    case 2:
      return {goal_at(h, b_now, false), "Descend onto the handle"};
    case 3:
      return {goal_at(w.gripper.position, b_now, true), "Close the gripper on the handle"};
    case 4: {
      require_held(w, "handle");
      const DrawerJoint& j = *w.drawer;
      const double target = open ? 0.15 : 0.0;
      return {goal_at(w.gripper.position + j.axis * (target - j.position), b_now, true),
              open ? "Pull the handle to slide the drawer out"
                   : "Push the handle to slide the drawer shut"};
    }
    case 5:
      return {goal_at(w.gripper.position, b_now, false), "Release the handle"};
    default:
      throw Error(Errc::kOracleStuck, fmt::format("round {} is past the plan", round));
  }
}

}  // namespace oracle_detail

// Number of rounds in the scripted plan for a task.
inline int oracle_plan_length(TaskName t) {
  switch (t) {
    case TaskName::kLiftCan: return 4;
    case TaskName::kDrawerOpen:
    case TaskName::kDrawerClose: return 5;
    default: return 7;
  }
}

inline OracleStep oracle_step(const WorldState& w, int round) {
  using namespace oracle_detail;
  if (round < 1 || round > oracle_plan_length(w.task.name)) {
    throw Error(Errc::kOracleStuck, fmt::format("round {} is past the plan", round));
  }
  switch (w.task.name) {
    case TaskName::kLiftCan: {
      if (round == 4) {
        require_held(w, "coke_can");
        const Vec3 p = w.gripper.position;
        return {goal_at(Vec3(p.x(), p.y(), p.z() + 0.15), w.gripper.binormal, true),
                "Lift the coke can straight up"};
      }
      return pick_and_place(w, round, "coke_can", Vec3::Zero(), 0.0, std::nullopt, "");
    }
    case TaskName::kMoveNear: {
      const SimObject& sponge = require(w, "sponge");
      const SimObject& orange = w.at("orange");
      // Beside the sponge on the orange's side, orange squared to the world
      // axes so the two boxes do not touch. Fingers close along x there so
      // neither finger sits over the sponge.
      const double side = orange.obb.center.y() >= sponge.obb.center.y() ? 1.0 : -1.0;
      const double gap = sponge.obb.support_radius(Vec3::UnitY()) + 0.025;
      const Vec3 place = sponge.obb.center + Vec3(0, side * gap, 0);
      return pick_and_place(w, round, "orange", place, w.params.table_z,
                            nearest_x_axis(w.gripper.binormal), "sponge");
    }
    case TaskName::kStackCube: {
      const SimObject& base = require(w, "yellow_cube");
      return pick_and_place(w, round, "green_cube", base.obb.center, base.obb.max_z(),
                            std::nullopt, "yellow_cube");
    }
    case TaskName::kPutCarrotOnPlate: {
      const SimObject& base = require(w, "plate");
      return pick_and_place(w, round, "carrot", base.obb.center, base.obb.max_z(),
                            std::nullopt, "plate");
    }
    case TaskName::kPutSpoonOnTowel: {
      const SimObject& base = require(w, "towel");
      return pick_and_place(w, round, "spoon", base.obb.center, base.obb.max_z(),
                            std::nullopt, "towel");
    }
    case TaskName::kDrawerOpen: return drawer_step(w, round, true);
    case TaskName::kDrawerClose: return drawer_step(w, round, false);
  }
  throw Error(Errc::kOracleStuck, "unknown task");
}

// Templated reply text around the scripted goal.
inline std::string oracle_reply_text(const WorldState& w, int round, Representation rep) {
  const OracleStep step = oracle_step(w, round);
  const Vec3& p = w.gripper.position;
  const std::string think = fmt::format(
      "Round {}. The gripper is at ({:.3f}, {:.3f}, {:.3f}) and is {}. {}. "
      "The gripper longitudinal axis stays pointing down and the binormal is kept "
      "perpendicular to the long side of the part being handled. The path is checked "
      "against nearby parts before moving.",
      round, p.x(), p.y(), p.z(), w.gripper.closed ? "closed" : "open", step.summary);
  return "<think>" + think + "</think>\n<answer>" + step.summary + ".\n" +
         format_action(step.goal, rep) + "\n</answer>";
}

class OraclePolicy : public Policy {
 public:
  PolicyReply complete(const std::vector<Message>& /*messages*/,
                       const PolicyContext& ctx) override {
    if (ctx.world == nullptr) throw Error(Errc::kOracleStuck, "oracle needs the world state");
    PolicyReply r;
    r.text = oracle_reply_text(*ctx.world, ctx.round, ctx.representation);
    return r;
  }
  nlohmann::json describe() const override { return {{"kind", "oracle"}}; }
};

inline std::shared_ptr<Policy> make_policy(const PolicyConfig& cfg) {
  if (cfg.kind == PolicyKind::kOracle) return std::make_shared<OraclePolicy>();
  return std::make_shared<RemotePolicy>(cfg);
}

}  // namespace goalpose

#endif  // GOALPOSE_ORACLE_HPP_
