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

#ifndef GOALPOSE_PROMPT_TEMPLATES_HPP_
#define GOALPOSE_PROMPT_TEMPLATES_HPP_

// Embedded copies of assets/prompts/*.txt. A unit test keeps them in sync.
// Each template has three "{}" slots: scene text, observation, task.

#include <string_view>

namespace goalpose {

inline constexpr std::string_view kPromptTemplateVersion = "v1";

inline constexpr std::string_view kBasePromptAxis = R"tpl(Scene information:{}

Scene observation:{}

moving forward: +x direction
moving up: +z direction
moving left: +y coordinate

The task: {}.

Please, 1. Figure out the following steps to achieve the task. 2. For each step, solve for the gripper longitudinal axis, binormal, normal, and gripper locations for achieving the task. Notice that once grasped, the robot gripper is rigidly attached to the object, meaning the robot gripper's rotation and the grasped item's rotation are the same.
You should reason step by step in a chain-of-thought fashion. You can start your reasoning by analyzing the scenes. You should pay attention to potential collision between the gripper and objects. Add proper offset if appropriate. Please explain your answer in detail.

You should output a numpy array as the gripper target to move. It should be a standalone line and start this line strictly with `ACTION:`. It is in the shape of 10: np.array([gripper x location, gripper y location, gripper z location, 3 dimensions for gripper longitudinal axis, 3 dimensions for gripper lateral(binormal) axis, gripper opening/close (0 for opening, 1 for closing)]).

Since we don't know what will happen after the next move, you only need to predict the next action and discuss the future action given different situations after the next move.

To grasp something, the gripper's lateral axis should be perpendicular to the object's longitudinal axis. For grasping table-top objects, the gripper longitudinal should be np.array([0, 0, -1]) (pointing downwards).
gripper opening/closing should be a standalone step.

Please note only output your answer but also output your reasoning process: 

<think>Your thinking process here</think>

<answer>Your answer here</answer>)tpl";

inline constexpr std::string_view kBasePromptEuler = R"tpl(Scene information:{}

Scene observation:{}

moving forward: +x direction
moving up: +z direction
moving left: +y coordinate

The task: {}.

Please, 1. Figure out the following steps to achieve the task. 2. For each step, solve for the gripper roll, pitch, yaw, and gripper locations for achieving the task. Notice that once grasped, the robot gripper is rigidly attached to the object, meaning the robot gripper's rotation and the grasped item's rotation are the same.
You should reason step by step in a chain-of-thought fashion. You can start your reasoning by analyzing the scenes. You should pay attention to potential collision between the gripper and objects. Add proper offset if appropriate. Please explain your answer in detail.

You should output a numpy array as the gripper target to move. It should be a standalone line and start this line strictly with `ACTION:`. It is in the shape of 7: np.array([gripper x location, gripper y location, gripper z location, gripper roll, gripper pitch, gripper yaw (radians, intrinsic Z-Y-X), gripper opening/close (0 for opening, 1 for closing)]).

Since we don't know what will happen after the next move, you only need to predict the next action and discuss the future action given different situations after the next move.

To grasp something, the gripper's lateral direction should be perpendicular to the object's long side. For grasping table-top objects, the gripper roll and pitch should be 0 (pointing downwards).
gripper opening/closing should be a standalone step.

Please note only output your answer but also output your reasoning process: 

<think>Your thinking process here</think>

<answer>Your answer here</answer>)tpl";

}  // namespace goalpose

#endif  // GOALPOSE_PROMPT_TEMPLATES_HPP_
