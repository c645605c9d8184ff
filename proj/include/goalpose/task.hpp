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

#ifndef GOALPOSE_TASK_HPP_
#define GOALPOSE_TASK_HPP_

#include <array>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "goalpose/error.hpp"

namespace goalpose {

enum class TaskName {
  kLiftCan,
  kMoveNear,
  kStackCube,
  kPutCarrotOnPlate,
  kPutSpoonOnTowel,
  kDrawerOpen,
  kDrawerClose,
};

inline constexpr std::array<TaskName, 7> kAllTasks = {
    TaskName::kLiftCan,          TaskName::kMoveNear,
    TaskName::kStackCube,        TaskName::kPutCarrotOnPlate,
    TaskName::kPutSpoonOnTowel,  TaskName::kDrawerOpen,
    TaskName::kDrawerClose};

// Success thresholds. These approximate the simulator benchmark's
// qualitative definitions at desk scale; they are configuration, not
// measured constants.
struct TaskParams {
  double lift_height = 0.10;        // m above the table, lift_can
  double near_distance = 0.05;      // m between xy centers, move_near
  double support_gap = 0.005;       // m, bottom-to-top gap for stacking
  double footprint_fraction = 1.0;  // xy containment within target footprint
  double drawer_open_min = 0.12;    // m joint travel
  double drawer_close_max = 0.01;   // m joint travel
};

struct TaskSpec {
  TaskName name = TaskName::kLiftCan;
  TaskParams params;

  static TaskSpec make(TaskName name) {
    TaskSpec spec{name, {}};
    if (name == TaskName::kStackCube) spec.params.footprint_fraction = 0.5;
    return spec;
  }

  // Throws InvalidTask for anything but the seven task identifiers.
  static TaskSpec from_string(std::string_view id);

  std::string_view id() const;
  // Natural-language instruction placed in the prompt's task slot.
  std::string_view instruction() const;
};

inline std::string_view task_id(TaskName name) {
  switch (name) {
    case TaskName::kLiftCan: return "lift_can";
    case TaskName::kMoveNear: return "move_near";
    case TaskName::kStackCube: return "stack_cube";
    case TaskName::kPutCarrotOnPlate: return "put_carrot_on_plate";
    case TaskName::kPutSpoonOnTowel: return "put_spoon_on_towel";
    case TaskName::kDrawerOpen: return "drawer_open";
    case TaskName::kDrawerClose: return "drawer_close";
  }
  return "unknown";
}

inline TaskSpec TaskSpec::from_string(std::string_view id) {
  for (TaskName n : kAllTasks) {
    if (task_id(n) == id) return make(n);
  }
  throw Error(Errc::kInvalidTask, "unknown task '" + std::string(id) + "'");
}

inline std::string_view TaskSpec::id() const { return task_id(name); }

inline std::string_view TaskSpec::instruction() const {
  switch (name) {
    case TaskName::kLiftCan: return "pick coke can";
    case TaskName::kMoveNear: return "move orange near sponge";
    case TaskName::kStackCube: return "stack the green cube onto the yellow cube";
    case TaskName::kPutCarrotOnPlate: return "put carrot on plate";
    case TaskName::kPutSpoonOnTowel: return "put the spoon on the towel";
    case TaskName::kDrawerOpen: return "open the drawer";
    case TaskName::kDrawerClose: return "close the drawer";
  }
  return "";
}

inline void to_json(nlohmann::json& j, const TaskParams& p) {
  j = {{"lift_height", p.lift_height},
       {"near_distance", p.near_distance},
       {"support_gap", p.support_gap},
       {"footprint_fraction", p.footprint_fraction},
       {"drawer_open_min", p.drawer_open_min},
       {"drawer_close_max", p.drawer_close_max}};
}

inline void from_json(const nlohmann::json& j, TaskParams& p) {
  j.at("lift_height").get_to(p.lift_height);
  j.at("near_distance").get_to(p.near_distance);
  j.at("support_gap").get_to(p.support_gap);
  j.at("footprint_fraction").get_to(p.footprint_fraction);
  j.at("drawer_open_min").get_to(p.drawer_open_min);
  j.at("drawer_close_max").get_to(p.drawer_close_max);
}

inline void to_json(nlohmann::json& j, const TaskSpec& t) {
  j = {{"name", t.id()}, {"params", t.params}};
}

inline void from_json(const nlohmann::json& j, TaskSpec& t) {
  t = TaskSpec::from_string(j.at("name").get<std::string>());
  if (j.contains("params")) j.at("params").get_to(t.params);
}

}  // namespace goalpose

#endif  // GOALPOSE_TASK_HPP_
