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

#ifndef GOALPOSE_PROTOCOL_HPP_
#define GOALPOSE_PROTOCOL_HPP_

// Conversation protocol: scene-information text, prompt assembly and parsing
// of model replies into executable gripper goals.
//
// Scene text (axis representation), one block per part, then the gripper:
//
//   [part 1] coke_can
//   center: (0.450, 0.020, 0.060)
//   size: (0.120, 0.066, 0.066)
//   longitudinal: (0.000, 0.000, 1.000)
//   binormal: (-1.000, 0.000, 0.000)
//   normal: (0.000, 1.000, 0.000)
//   [gripper]
//   position: (0.400, 0.000, 0.350)
//   longitudinal: (0.000, 0.000, -1.000)
//   binormal: (0.000, 1.000, 0.000)
//   state: open
//
// In Euler mode the axis lines of each block are replaced by a single
// "rotation (roll, pitch, yaw): (r, p, y)" line.

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "goalpose/codec.hpp"
#include "goalpose/error.hpp"
#include "goalpose/geometry.hpp"
#include "goalpose/prompt_templates.hpp"
#include "goalpose/world.hpp"

namespace goalpose {

enum class Representation { kAxis, kEuler };

inline std::string_view representation_name(Representation r) {
  return r == Representation::kAxis ? "axis" : "euler";
}

inline Representation representation_from_string(std::string_view s) {
  if (s == "axis") return Representation::kAxis;
  if (s == "euler") return Representation::kEuler;
  throw Error(Errc::kInvalidArgument, "representation must be axis or euler");
}

inline std::string_view base_prompt_template(Representation r) {
  return r == Representation::kAxis ? kBasePromptAxis : kBasePromptEuler;
}

// ---------------------------------------------------------------------------
// Messages

inline constexpr std::string_view kImageToken = "<image>";
inline constexpr std::string_view kDefaultSystemPrompt = "You are a helpful assistant.";

// An observation image: a path used for persistence and, while an episode is
// live, the encoded PNG bytes.
struct ImageRef {
  std::string path;
  std::shared_ptr<const Bytes> png;

  Bytes bytes() const {
    if (png) return *png;
    const std::string data = read_file(path);
    return Bytes(data.begin(), data.end());
  }
};

enum class Role { kSystem, kUser, kAssistant };

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

inline Role role_from_string(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw Error(Errc::kInvalidArgument, "unknown role " + std::string(s));
}

// `text` contains one kImageToken per entry of `images`, marking where the
// image sits in the content. Assistant messages carry no images.
struct Message {
  Role role = Role::kUser;
  std::string text;
  std::vector<ImageRef> images;
};

// ---------------------------------------------------------------------------
// Scene text

namespace detail {

inline std::string fmt_real(double v, int precision) {
  std::string s = fmt::format("{:.{}f}", v, precision);
  // Print negative zero as zero.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

inline std::string fmt_vec(const Vec3& v, int precision) {
  return "(" + fmt_real(v.x(), precision) + ", " + fmt_real(v.y(), precision) +
         ", " + fmt_real(v.z(), precision) + ")";
}

}  // namespace detail

// Text-level scene: exactly the numbers that appear in the serialized text.
struct SceneRecord {
  struct Part {
    std::string label;
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Zero();
    Vec3 longitudinal = Vec3::Zero();
    Vec3 binormal = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Vec3 rpy = Vec3::Zero();
  };
  struct Gripper {
    Vec3 position = Vec3::Zero();
    Vec3 longitudinal = Vec3::Zero();
    Vec3 binormal = Vec3::Zero();
    Vec3 rpy = Vec3::Zero();
    bool closed = false;
  };
  Representation representation = Representation::kAxis;
  std::vector<Part> parts;
  Gripper gripper;
};

struct SceneFormat {
  Representation representation = Representation::kAxis;
  int precision = 3;
};

// Gripper orientation in Euler form: angles of the goal rotation relative to
// the initial gripper frame.
inline EulerAngles gripper_euler(const Vec3& longitudinal, const Vec3& binormal) {
  const RotationMatrix r = rotation_from_axis_goal(
      longitudinal, binormal, initial_gripper_longitudinal(),
      initial_gripper_binormal());
  return matrix_to_euler(r.matrix()).angles;
}

inline std::pair<UnitVec3, UnitVec3> gripper_axes_from_euler(const EulerAngles& e) {
  const Mat3 r = euler_to_matrix(e);
  return {UnitVec3::normalize(r * initial_gripper_longitudinal().vec()),
          UnitVec3::normalize(r * initial_gripper_binormal().vec())};
}

inline SceneRecord to_record(const SceneInfo& scene, Representation rep) {
  SceneRecord rec;
  rec.representation = rep;
  for (const auto& p : scene.parts) {
    SceneRecord::Part r;
    r.label = p.label;
    r.center = p.center;
    r.size = p.size;
    r.longitudinal = p.axes.longitudinal;
    r.binormal = p.axes.binormal;
    r.normal = p.axes.normal;
    const EulerAngles e = axes_to_euler(p.axes).angles;
    r.rpy = Vec3(e.roll, e.pitch, e.yaw);
    rec.parts.push_back(std::move(r));
  }
  rec.gripper.position = scene.gripper.position;
  rec.gripper.longitudinal = scene.gripper.longitudinal;
  rec.gripper.binormal = scene.gripper.binormal;
  const EulerAngles e = gripper_euler(scene.gripper.longitudinal, scene.gripper.binormal);
  rec.gripper.rpy = Vec3(e.roll, e.pitch, e.yaw);
  rec.gripper.closed = scene.gripper.closed;
  return rec;
}

inline std::string format_scene(const SceneRecord& rec, int precision = 3) {
  using detail::fmt_vec;
  std::string out;
  const bool euler = rec.representation == Representation::kEuler;
  for (std::size_t i = 0; i < rec.parts.size(); ++i) {
    const auto& p = rec.parts[i];
    out += fmt::format("[part {}] {}\n", i + 1, p.label);
    out += "center: " + fmt_vec(p.center, precision) + "\n";
    out += "size: " + fmt_vec(p.size, precision) + "\n";
    if (euler) {
      out += "rotation (roll, pitch, yaw): " + fmt_vec(p.rpy, precision) + "\n";
    } else {
      out += "longitudinal: " + fmt_vec(p.longitudinal, precision) + "\n";
      out += "binormal: " + fmt_vec(p.binormal, precision) + "\n";
      out += "normal: " + fmt_vec(p.normal, precision) + "\n";
    }
  }
  out += "[gripper]\n";
  out += "position: " + fmt_vec(rec.gripper.position, precision) + "\n";
  if (euler) {
    out += "rotation (roll, pitch, yaw): " + fmt_vec(rec.gripper.rpy, precision) + "\n";
  } else {
    out += "longitudinal: " + fmt_vec(rec.gripper.longitudinal, precision) + "\n";
    out += "binormal: " + fmt_vec(rec.gripper.binormal, precision) + "\n";
  }
  out += std::string("state: ") + (rec.gripper.closed ? "closed" : "open");
  return out;
}

inline std::string serialize_scene(const SceneInfo& scene, const SceneFormat& f = {}) {
  return format_scene(to_record(scene, f.representation), f.precision);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Strict decimal number; leading '+' allowed; rejects nan/inf.
inline std::optional<double> parse_number(std::string_view tok) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline Vec3 parse_vec_field(std::string_view line, std::string_view key) {
  if (line.substr(0, key.size()) != key) {
    throw Error(Errc::kMalformedScene, "expected '" + std::string(key) + "'");
  }
  std::string_view rest = trim(line.substr(key.size()));
  if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
    throw Error(Errc::kMalformedScene, "expected (x, y, z) after " + std::string(key));
  }
  rest = rest.substr(1, rest.size() - 2);
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    const auto comma = rest.find(',');
    if ((i < 2) != (comma != std::string_view::npos)) {
      throw Error(Errc::kMalformedScene, "expected three components");
    }
    const auto n = parse_number(rest.substr(0, comma));
    if (!n) throw Error(Errc::kMalformedScene, "bad number in " + std::string(key));
    v[i] = *n;
    rest = i < 2 ? rest.substr(comma + 1) : std::string_view{};
  }
  return v;
}

}  // namespace detail

// Inverse of format_scene.
inline SceneRecord parse_scene(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }
  SceneRecord rec;
  std::size_t i = 0;
  auto next = [&]() -> std::string_view {
    if (i >= lines.size()) throw Error(Errc::kMalformedScene, "truncated scene text");
    return lines[i++];
  };
  bool euler_seen = false;
  bool axis_seen = false;
  while (i < lines.size() && lines[i].rfind("[part ", 0) == 0) {
    const std::string_view head = next();
    const auto close = head.find("] ");
    if (close == std::string_view::npos) throw Error(Errc::kMalformedScene, "bad part header");
    SceneRecord::Part p;
    p.label = std::string(head.substr(close + 2));
    p.center = detail::parse_vec_field(next(), "center:");
    p.size = detail::parse_vec_field(next(), "size:");
    if (i < lines.size() && lines[i].rfind("rotation", 0) == 0) {
      p.rpy = detail::parse_vec_field(next(), "rotation (roll, pitch, yaw):");
      euler_seen = true;
    } else {
      p.longitudinal = detail::parse_vec_field(next(), "longitudinal:");
      p.binormal = detail::parse_vec_field(next(), "binormal:");
      p.normal = detail::parse_vec_field(next(), "normal:");
      axis_seen = true;
    }
    rec.parts.push_back(std::move(p));
  }
  if (next() != "[gripper]") throw Error(Errc::kMalformedScene, "missing [gripper] block");
  rec.gripper.position = detail::parse_vec_field(next(), "position:");
  if (i < lines.size() && lines[i].rfind("rotation", 0) == 0) {
    rec.gripper.rpy = detail::parse_vec_field(next(), "rotation (roll, pitch, yaw):");
    euler_seen = true;
  } else {
    rec.gripper.longitudinal = detail::parse_vec_field(next(), "longitudinal:");
    rec.gripper.binormal = detail::parse_vec_field(next(), "binormal:");
    axis_seen = true;
  }
  const std::string_view state = next();
  if (state == "state: open") {
    rec.gripper.closed = false;
  } else if (state == "state: closed") {
    rec.gripper.closed = true;
  } else {
    throw Error(Errc::kMalformedScene, "bad gripper state line");
  }
  if (i != lines.size()) throw Error(Errc::kMalformedScene, "trailing scene text");
  if (euler_seen && axis_seen) throw Error(Errc::kMalformedScene, "mixed representations");
  rec.representation = euler_seen ? Representation::kEuler : Representation::kAxis;
  return rec;
}

// ---------------------------------------------------------------------------
// Prompt assembly

// Replaces the "{}" slots in order. Throws TemplateSlotMissing unless the
// template has exactly as many slots as values.
inline std::string fill_template(std::string_view tpl,
                                 const std::vector<std::string_view>& values) {
  std::string out;
  std::size_t used = 0;
  std::size_t pos = 0;
  while (true) {
    const auto at = tpl.find("{}", pos);
    if (at == std::string_view::npos) break;
    if (used == values.size()) {
      throw Error(Errc::kTemplateSlotMissing, "template has more slots than values");
    }
    out.append(tpl.substr(pos, at - pos));
    out.append(values[used++]);
    pos = at + 2;
  }
  if (used != values.size()) {
    throw Error(Errc::kTemplateSlotMissing,
                fmt::format("template has {} slots, expected {}", used, values.size()));
  }
  out.append(tpl.substr(pos));
  return out;
}

// One completed (or in-progress) conversation round.
struct Turn {
  std::string scene_text;
  ImageRef image;
  std::optional<std::string> guidance;  // user-written, guided mode only
  std::string assistant_text;
};

struct ConversationState {
  std::string base_prompt = std::string(kBasePromptAxis);
  std::string task_text;
  std::vector<Turn> turns;  // round i + 1 at index i
};

struct PromptOptions {
  bool system_message = true;
  std::string system_prompt = std::string(kDefaultSystemPrompt);
  int image_history = -1;  // images kept from the most recent N rounds; -1 = all
};

inline std::string round_user_text(const ConversationState& conv, std::size_t index,
                                   const std::string& scene_text,
                                   const std::optional<std::string>& guidance) {
  std::string text;
  const std::string scene_slot = "\n" + scene_text;
  if (index == 0) {
    text = fill_template(conv.base_prompt, {scene_slot, kImageToken, conv.task_text});
  } else {
    text = "Scene information:" + scene_slot + "\n\nScene observation:" +
           std::string(kImageToken);
  }
  if (guidance && !guidance->empty()) text += "\n\n" + *guidance;
  return text;
}

// Message list for the next query: history turns (user, assistant) followed by
// the current round's user message (scene text + observation [+ guidance]).
inline std::vector<Message> build_prompt(const ConversationState& history,
                                         const std::string& scene_text,
                                         const ImageRef& image,
                                         const std::optional<std::string>& guidance = {},
                                         const PromptOptions& opts = {}) {
  std::vector<Message> msgs;
  if (opts.system_message) msgs.push_back({Role::kSystem, opts.system_prompt, {}});
  const std::size_t current = history.turns.size();
  const std::size_t total_rounds = current + 1;
  auto keep_image = [&](std::size_t idx) {
    return opts.image_history < 0 ||
           total_rounds - idx <= static_cast<std::size_t>(opts.image_history);
  };
  auto user_message = [&](std::size_t idx, const std::string& scene,
                          const ImageRef& img,
                          const std::optional<std::string>& g) {
    Message m{Role::kUser, round_user_text(history, idx, scene, g), {}};
    if (keep_image(idx)) {
      m.images.push_back(img);
    } else {
      const auto at = m.text.find(kImageToken);
      m.text.replace(at, kImageToken.size(), "(observation omitted)");
    }
    return m;
  };
  for (std::size_t i = 0; i < current; ++i) {
    const Turn& t = history.turns[i];
    msgs.push_back(user_message(i, t.scene_text, t.image, t.guidance));
    msgs.push_back({Role::kAssistant, t.assistant_text, {}});
  }
  msgs.push_back(user_message(current, scene_text, image, guidance));
  return msgs;
}

inline std::vector<Message> build_prompt(const ConversationState& history,
                                         const SceneInfo& scene, const ImageRef& image,
                                         Representation rep,
                                         const std::optional<std::string>& guidance = {},
                                         const PromptOptions& opts = {}) {
  return build_prompt(history, serialize_scene(scene, {rep, 3}), image, guidance, opts);
}

// The complete conversation of a finished episode (every turn answered).
inline std::vector<Message> conversation_messages(const ConversationState& conv,
                                                  const PromptOptions& opts = {}) {
  std::vector<Message> msgs;
  if (opts.system_message) msgs.push_back({Role::kSystem, opts.system_prompt, {}});
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const Turn& t = conv.turns[i];
    msgs.push_back({Role::kUser, round_user_text(conv, i, t.scene_text, t.guidance), {t.image}});
    msgs.push_back({Role::kAssistant, t.assistant_text, {}});
  }
  return msgs;
}

// ---------------------------------------------------------------------------
// Response parsing

struct ParsedResponse {
  std::string think;
  std::string answer;
  bool has_think = false;
  bool has_answer = false;
  std::vector<double> raw_values;        // as written on the ACTION line
  std::array<double, 10> action_vector{};  // position, l, b, flag (repaired)
  GripperGoal goal;
  double repair_angle_deg = 0.0;  // binormal change made by orthonormalization
  std::vector<std::string> warnings;
};

inline constexpr double kRepairWarningDeg = 10.0;

namespace detail {

inline std::optional<std::string> tag_span(std::string_view text, std::string_view open,
                                           std::string_view close) {
  const auto a = text.find(open);
  if (a == std::string_view::npos) return std::nullopt;
  const auto b = text.find(close, a + open.size());
  if (b == std::string_view::npos) return std::nullopt;
  return std::string(trim(text.substr(a + open.size(), b - a - open.size())));
}

inline std::optional<std::string_view> action_payload(std::string_view line) {
  std::string_view s = trim(line);
  if (s.rfind("<answer>", 0) == 0) s = trim(s.substr(8));
  if (s.rfind("ACTION:", 0) != 0) return std::nullopt;
  return s.substr(7);
}

}  // namespace detail

// Parses a model reply. The last line starting with "ACTION:" wins; the
// bracketed list on it must hold 10 numbers (7 in Euler mode).
inline ParsedResponse parse_response(std::string_view text,
                                     Representation rep = Representation::kAxis) {
  ParsedResponse out;
  if (auto t = detail::tag_span(text, "<think>", "</think>")) {
    out.think = *t;
    out.has_think = true;
  } else {
    out.warnings.emplace_back("missing <think> block");
  }
  if (auto a = detail::tag_span(text, "<answer>", "</answer>")) {
    out.answer = *a;
    out.has_answer = true;
  } else {
    out.warnings.emplace_back("missing <answer> block");
  }

  std::optional<std::string_view> payload;
  int action_lines = 0;
  std::string_view rest = text;
  while (true) {
    const auto nl = rest.find('\n');
    const std::string_view line = rest.substr(0, nl);
    if (auto p = detail::action_payload(line)) {
      payload = p;
      ++action_lines;
    }
    if (nl == std::string_view::npos) break;
    rest = rest.substr(nl + 1);
  }
  if (!payload) throw Error(Errc::kNoActionLine, "no line starts with ACTION:");
  if (action_lines > 1) {
    out.warnings.push_back(fmt::format("{} ACTION lines; using the last", action_lines));
  }

  std::string_view list = *payload;
  const auto close = list.find(']');
  if (close != std::string_view::npos) {
    const auto open = list.rfind('[', close);
    if (open == std::string_view::npos) {
      throw Error(Errc::kNonNumericToken, "unbalanced ']' on ACTION line");
    }
    list = list.substr(open + 1, close - open - 1);
  } else if (list.find('[') != std::string_view::npos) {
    throw Error(Errc::kNonNumericToken, "unterminated '[' on ACTION line");
  }

  std::size_t pos = 0;
  while (pos < list.size()) {
    const auto end = list.find_first_of(", \t\r", pos);
    const std::string_view tok =
        list.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    if (!tok.empty()) {
      const auto v = detail::parse_number(tok);
      if (!v) {
        throw Error(Errc::kNonNumericToken,
                    "not a number: '" + std::string(tok.substr(0, 32)) + "'");
      }
      out.raw_values.push_back(*v);
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }

  const std::size_t arity = rep == Representation::kAxis ? 10 : 7;
  if (out.raw_values.size() != arity) {
    throw Error(Errc::kWrongArity,
                fmt::format("WrongArity({}): expected {}", out.raw_values.size(), arity));
  }
  const double flag = out.raw_values.back();
  bool close_flag = false;
  if (std::abs(flag) <= 0.25) {
    close_flag = false;
  } else if (std::abs(flag - 1.0) <= 0.25) {
    close_flag = true;
  } else {
    throw Error(Errc::kAmbiguousGripperFlag, fmt::format("gripper flag {}", flag));
  }

  const auto& v = out.raw_values;
  out.goal.position = Vec3(v[0], v[1], v[2]);
  out.goal.close = close_flag;
  if (rep == Representation::kAxis) {
    const Vec3 l(v[3], v[4], v[5]);
    const Vec3 b(v[6], v[7], v[8]);
    const auto [lu, bu] = orthonormalize(l, b);
    out.goal.longitudinal = lu;
    out.goal.binormal = bu;
    const double cosang = std::clamp(bu.dot(b.normalized()), -1.0, 1.0);
    out.repair_angle_deg = std::acos(cosang) * 180.0 / std::numbers::pi;
    if (out.repair_angle_deg > kRepairWarningDeg) {
      out.warnings.push_back(
          fmt::format("binormal repaired by {:.1f} deg", out.repair_angle_deg));
    }
  } else {
    const auto [lu, bu] = gripper_axes_from_euler({v[3], v[4], v[5]});
    out.goal.longitudinal = lu;
    out.goal.binormal = bu;
  }
  const Vec3& l = out.goal.longitudinal;
  const Vec3& b = out.goal.binormal;
  out.action_vector = {v[0], v[1], v[2], l.x(), l.y(), l.z(),
                       b.x(), b.y(), b.z(), close_flag ? 1.0 : 0.0};
  return out;
}

namespace detail {
inline std::string shortest(double v) {
  if (v == 0.0) return "0";  // also folds -0
  return fmt::format("{}", v);
}
}  // namespace detail

// Canonical ACTION line for a goal; parse_response inverts it.
inline std::string format_action(const GripperGoal& g,
                                 Representation rep = Representation::kAxis) {
  using detail::shortest;
  std::vector<double> v = {g.position.x(), g.position.y(), g.position.z()};
  if (rep == Representation::kAxis) {
    for (const Vec3* a : {&g.longitudinal.vec(), &g.binormal.vec()}) {
      v.insert(v.end(), {a->x(), a->y(), a->z()});
    }
  } else {
    const EulerAngles e = gripper_euler(g.longitudinal, g.binormal);
    v.insert(v.end(), {e.roll, e.pitch, e.yaw});
  }
  std::string out = "ACTION: np.array([";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += shortest(v[i]);
  }
  out += std::string(", ") + (g.close ? "1" : "0") + "])";
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const ParsedResponse& p) {
  j = {{"think", p.think},
       {"answer", p.answer},
       {"has_think", p.has_think},
       {"has_answer", p.has_answer},
       {"raw_values", p.raw_values},
       {"action_vector", p.action_vector},
       {"goal", p.goal},
       {"repair_angle_deg", p.repair_angle_deg},
       {"warnings", p.warnings}};
}

inline void from_json(const nlohmann::json& j, ParsedResponse& p) {
  p.think = j.at("think");
  p.answer = j.at("answer");
  p.has_think = j.at("has_think");
  p.has_answer = j.at("has_answer");
  p.raw_values = j.at("raw_values").get<std::vector<double>>();
  p.action_vector = j.at("action_vector").get<std::array<double, 10>>();
  p.goal = j.at("goal").get<GripperGoal>();
  p.repair_angle_deg = j.at("repair_angle_deg");
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
}

}  // namespace goalpose

#endif  // GOALPOSE_PROTOCOL_HPP_
