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

#include <gtest/gtest.h>

#include <string>

#include "goalpose/protocol.hpp"
#include "goalpose/world.hpp"

namespace goalpose {
namespace {

std::string source_file(const std::string& rel) {
  return read_file(std::string(GOALPOSE_SOURCE_DIR) + "/" + rel);
}

Errc error_code(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kInvalidArgument;
}

// ---------------------------------------------------------------------------
// Prompt assembly

TEST(PromptTemplate, EmbeddedCopiesMatchAssets) {
  EXPECT_EQ(source_file("assets/prompts/base_prompt_axis_v1.txt"), kBasePromptAxis);
  EXPECT_EQ(source_file("assets/prompts/base_prompt_euler_v1.txt"), kBasePromptEuler);
}

TEST(BuildPrompt, GoldenFirstRound) {
  ConversationState conv;
  conv.task_text = "stack the green cube onto the yellow cube";
  const std::string scene = source_file("tests/golden/scene_stack.txt");
  const auto msgs = build_prompt(conv, scene, ImageRef{"frames/round_01.png", nullptr});
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].role, Role::kSystem);
  EXPECT_EQ(msgs[1].role, Role::kUser);
  EXPECT_EQ(msgs[1].text, source_file("tests/golden/prompt_stack_round1.txt"));
  ASSERT_EQ(msgs[1].images.size(), 1u);
  EXPECT_EQ(msgs[1].images[0].path, "frames/round_01.png");
}

TEST(BuildPrompt, ContainsFixedLines) {
  for (TaskName t : kAllTasks) {
    ConversationState conv;
    conv.task_text = std::string(TaskSpec::make(t).instruction());
    const WorldState w = world_init(TaskSpec::make(t), 0);
    const auto msgs = build_prompt(conv, scene_snapshot(w), ImageRef{}, Representation::kAxis);
    const std::string& text = msgs.back().text;
    EXPECT_NE(text.find("moving forward: +x direction\n"), std::string::npos);
    EXPECT_NE(text.find("start this line strictly with `ACTION:`"), std::string::npos);
    EXPECT_NE(text.find("The task: " + conv.task_text + "."), std::string::npos);
  }
}

TEST(BuildPrompt, MessageCountAndAlternation) {
  ConversationState conv;
  conv.task_text = "pick coke can";
  for (int t = 1; t <= 6; ++t) {
    const auto msgs = build_prompt(conv, "scene", ImageRef{});
    ASSERT_EQ(msgs.size(), static_cast<std::size_t>(1 + 2 * (t - 1) + 1));
    for (std::size_t i = 1; i < msgs.size(); ++i) {
      EXPECT_EQ(msgs[i].role, i % 2 == 1 ? Role::kUser : Role::kAssistant);
      if (msgs[i].role == Role::kAssistant) EXPECT_TRUE(msgs[i].images.empty());
    }
    conv.turns.push_back({"scene", ImageRef{}, std::nullopt, "reply"});
  }
}

TEST(BuildPrompt, LaterRoundsCarrySceneAndGuidance) {
  ConversationState conv;
  conv.task_text = "move orange near sponge";
  conv.turns.push_back({"s1", ImageRef{"a.png", nullptr}, std::nullopt, "a1"});
  const auto msgs = build_prompt(conv, "s2", ImageRef{"b.png", nullptr},
                                 std::string("Move over to the orange"));
  EXPECT_EQ(msgs.back().text,
            "Scene information:\ns2\n\nScene observation:<image>\n\nMove over to the orange");
  EXPECT_EQ(msgs[2].text, "a1");
  EXPECT_EQ(msgs.back().images.at(0).path, "b.png");
}

TEST(BuildPrompt, ImageHistoryDepth) {
  ConversationState conv;
  conv.task_text = "x";
  for (int i = 0; i < 3; ++i) conv.turns.push_back({"s", ImageRef{}, std::nullopt, "a"});
  PromptOptions opts;
  opts.image_history = 2;
  const auto msgs = build_prompt(conv, "s", ImageRef{}, std::nullopt, opts);
  int images = 0;
  for (const auto& m : msgs) images += static_cast<int>(m.images.size());
  EXPECT_EQ(images, 2);
  EXPECT_EQ(msgs[1].text.find(kImageToken), std::string::npos);
}

TEST(BuildPrompt, PureFunction) {
  ConversationState conv;
  conv.task_text = "open the drawer";
  conv.turns.push_back({"s1", ImageRef{}, std::string("g"), "a1"});
  const auto a = build_prompt(conv, "s2", ImageRef{});
  const auto b = build_prompt(conv, "s2", ImageRef{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].text, b[i].text);
}

TEST(FillTemplate, SlotCountMismatch) {
  EXPECT_EQ(error_code([] { fill_template("{} {}", {"a"}); }), Errc::kTemplateSlotMissing);
  EXPECT_EQ(error_code([] { fill_template("{}", {"a", "b"}); }), Errc::kTemplateSlotMissing);
  EXPECT_EQ(fill_template("<{}|{}>", {"a", "b"}), "<a|b>");
}

// ---------------------------------------------------------------------------
// Scene text

SceneInfo one_part_scene() {
  SceneInfo s;
  ObjectPartState p;
  p.label = "sponge";
  p.center = Vec3(0.1, -0.2, 0.05);
  p.size = Vec3(0.07, 0.04, 0.024);
  p.axes = identity_axes();
  s.parts.push_back(p);
  s.gripper = {Vec3(0.4, 0, 0.35), initial_gripper_longitudinal(),
               initial_gripper_binormal(), false};
  return s;
}

TEST(SerializeScene, ThreeDecimalFields) {
  const std::string text = serialize_scene(one_part_scene());
  EXPECT_NE(text.find("center: (0.100, -0.200, 0.050)"), std::string::npos);
  EXPECT_NE(text.find("binormal: (0.000, -1.000, 0.000)"), std::string::npos);
  EXPECT_NE(text.find("state: open"), std::string::npos);
  EXPECT_EQ(text.find("-0.000"), std::string::npos);
}

TEST(SerializeScene, ParseFixedPoint) {
  for (TaskName t : kAllTasks) {
    for (Representation rep : {Representation::kAxis, Representation::kEuler}) {
      const WorldState w = world_init(TaskSpec::make(t), 4);
      const std::string a = serialize_scene(scene_snapshot(w), {rep, 3});
      const SceneRecord rec = parse_scene(a);
      EXPECT_EQ(rec.representation, rep);
      const std::string b = format_scene(rec, 3);
      EXPECT_EQ(a, b);
      EXPECT_EQ(format_scene(parse_scene(b), 3), b);
    }
  }
}

TEST(SerializeScene, EulerModeReplacesAxisLines) {
  const std::string text = serialize_scene(one_part_scene(), {Representation::kEuler, 3});
  EXPECT_EQ(text.find("longitudinal:"), std::string::npos);
  EXPECT_EQ(text.find("normal:"), std::string::npos);
  EXPECT_NE(text.find("rotation (roll, pitch, yaw): (0.000, 0.000, 0.000)"), std::string::npos);
}

TEST(ParseScene, RejectsMalformedText) {
  EXPECT_EQ(error_code([] { parse_scene("[gripper]\nposition: (1, 2)\n"); }),
            Errc::kMalformedScene);
  EXPECT_EQ(error_code([] { parse_scene(""); }), Errc::kMalformedScene);
}

// ---------------------------------------------------------------------------
// Response parsing

constexpr const char* kReply =
    "<think>The can is ahead; descend.</think>\n"
    "<answer>Move down.\n"
    "ACTION: np.array([0.1, 0.0, 0.3, 0, 0, -1, 0, 1, 0, 1])\n"
    "</answer>";

TEST(ParseResponse, ExampleFormat) {
  const ParsedResponse p = parse_response(kReply);
  const std::array<double, 10> expect = {0.1, 0.0, 0.3, 0, 0, -1, 0, 1, 0, 1};
  EXPECT_EQ(p.action_vector, expect);
  EXPECT_EQ(p.goal.position, Vec3(0.1, 0.0, 0.3));
  EXPECT_EQ(p.goal.longitudinal.vec(), Vec3(0, 0, -1));
  EXPECT_EQ(p.goal.binormal.vec(), Vec3(0, 1, 0));
  EXPECT_TRUE(p.goal.close);
  EXPECT_TRUE(p.has_think);
  EXPECT_TRUE(p.has_answer);
  EXPECT_EQ(p.think, "The can is ahead; descend.");
  EXPECT_TRUE(p.warnings.empty());
}

TEST(ParseResponse, TolerantSyntax) {
  const ParsedResponse a = parse_response("ACTION: [0.1 ,0.2,0.3, 0,0,-1, 1,0,0, 0.1] done");
  EXPECT_FALSE(a.goal.close);
  EXPECT_EQ(a.goal.binormal.vec(), Vec3(1, 0, 0));
  EXPECT_FALSE(a.has_think);
  EXPECT_EQ(a.warnings.size(), 2u);
  const ParsedResponse b = parse_response("ACTION: 0.1, 0.2, 0.3, 0, 0, -1, 1, 0, 0, 0.9");
  EXPECT_TRUE(b.goal.close);
  const ParsedResponse c =
      parse_response("<answer>ACTION: numpy.array([+0.1, 2e-1, 0.3, 0, 0, -1, 1, 0, 0, 1])</answer>");
  EXPECT_DOUBLE_EQ(c.goal.position.y(), 0.2);
}

TEST(ParseResponse, LastActionWins) {
  const ParsedResponse p = parse_response(
      "ACTION: np.array([0.1, 0, 0.3, 0, 0, -1, 0, 1, 0, 0])\nrethinking\n"
      "ACTION: np.array([0.2, 0, 0.3, 0, 0, -1, 0, 1, 0, 0])");
  EXPECT_EQ(p.goal.position.x(), 0.2);
  bool warned = false;
  for (const auto& w : p.warnings) warned |= w.find("ACTION lines") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(ParseResponse, ErrorPaths) {
  EXPECT_EQ(error_code([] { parse_response("no action here"); }), Errc::kNoActionLine);
  EXPECT_EQ(error_code([] { parse_response("  action: [1]"); }), Errc::kNoActionLine);
  try {
    parse_response("ACTION: np.array([0.1, 0, 0.3, 0, 0, -1, 0, 1, 0])");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kWrongArity);
    EXPECT_NE(std::string(e.what()).find("WrongArity(9)"), std::string::npos);
  }
  EXPECT_EQ(error_code([] { parse_response("ACTION: [0.1, 0, 0.3, 0, 0, -1, 0, 1, x, 0]"); }),
            Errc::kNonNumericToken);
  EXPECT_EQ(error_code([] { parse_response("ACTION: [0.1, 0, 0.3, 0, 0, -1, 0, 1, 0, 0.5]"); }),
            Errc::kAmbiguousGripperFlag);
  EXPECT_EQ(error_code([] { parse_response("ACTION: [0.1, 0, 0.3, 0, 0, -1, 0, 0, -2, 0]"); }),
            Errc::kParallelAxes);
  EXPECT_EQ(error_code([] { parse_response("ACTION: [0.1, 0, 0.3, nan, 0, -1, 0, 1, 0, 0]"); }),
            Errc::kNonNumericToken);
}

TEST(ParseResponse, RepairWarning) {
  const ParsedResponse small = parse_response("ACTION: [0.1, 0, 0.3, 0, 0, -1, 0, 1, 0.05, 0]");
  EXPECT_LT(small.repair_angle_deg, 10.0);
  EXPECT_NEAR(small.goal.longitudinal.dot(small.goal.binormal), 0.0, 1e-12);
  const ParsedResponse big = parse_response("ACTION: [0.1, 0, 0.3, 0, 0, -1, 0, 1, -0.5, 0]");
  EXPECT_GT(big.repair_angle_deg, 10.0);
  bool warned = false;
  for (const auto& w : big.warnings) warned |= w.find("repaired") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(ParseResponse, FormatRoundTrip) {
  Rng rng(8);
  for (int i = 0; i < 5000; ++i) {
    GripperGoal g;
    g.position = Vec3(rng.uniform(0.1, 0.9), rng.uniform(-0.5, 0.5), rng.uniform(0, 0.6));
    const Vec3 a(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec3 b(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (a.norm() < 0.1 || a.normalized().cross(b).norm() < 0.1) continue;
    const auto [au, bu] = orthonormalize(a, b);
    g.longitudinal = au;
    g.binormal = bu;
    g.close = rng.uniform() < 0.5;
    for (Representation rep : {Representation::kAxis, Representation::kEuler}) {
      const ParsedResponse p = parse_response(format_action(g, rep), rep);
      EXPECT_LE((p.goal.position - g.position).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((p.goal.longitudinal.vec() - g.longitudinal.vec()).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((p.goal.binormal.vec() - g.binormal.vec()).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_EQ(p.goal.close, g.close);
    }
  }
}

TEST(ParseResponse, EulerArity) {
  const ParsedResponse p =
      parse_response("ACTION: np.array([0.4, 0, 0.3, 0, 0, 1.5707963267948966, 1])",
                     Representation::kEuler);
  EXPECT_LE((p.goal.longitudinal.vec() - Vec3(0, 0, -1)).norm(), 1e-12);
  EXPECT_LE((p.goal.binormal.vec() - Vec3(-1, 0, 0)).norm(), 1e-12);
  EXPECT_EQ(error_code([] { parse_response(kReply, Representation::kEuler); }),
            Errc::kWrongArity);
}

TEST(ParseResponse, FuzzNeverCrashes) {
  const std::string seed_text = kReply;
  const std::string alphabet = "[](),.-+eE0123456789 \nACTION:<>/np.array";
  Rng rng(123);
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s = seed_text;
    const int edits = 1 + static_cast<int>(rng.next() % 8);
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = s.empty() ? 0 : rng.next() % s.size();
      switch (rng.next() % 4) {
        case 0:
          if (!s.empty()) s.erase(at, 1 + rng.next() % 4);
          break;
        case 1:
          s.insert(s.begin() + static_cast<std::ptrdiff_t>(at),
                   alphabet[rng.next() % alphabet.size()]);
          break;
        case 2:
          if (!s.empty()) s[at] = static_cast<char>(rng.next() % 256);
          break;
        default:
          s.insert(at, s.substr(rng.next() % (s.size() + 1), 1 + rng.next() % 12));
      }
    }
    try {
      const ParsedResponse p = parse_response(s);
      ++parsed;
      ASSERT_TRUE(p.action_vector[9] == 0.0 || p.action_vector[9] == 1.0);
      ASSERT_NEAR(p.goal.longitudinal.dot(p.goal.binormal), 0.0, 1e-9);
    } catch (const Error&) {
      ++rejected;
    }
  }
  EXPECT_EQ(parsed + rejected, 100000);
  EXPECT_GT(parsed, 0);
  EXPECT_GT(rejected, 0);
}

TEST(ParsedResponseJson, RoundTrip) {
  const ParsedResponse p = parse_response(kReply);
  const nlohmann::json j = p;
  EXPECT_EQ(nlohmann::json(j.get<ParsedResponse>()).dump(), j.dump());
}

}  // namespace
}  // namespace goalpose
