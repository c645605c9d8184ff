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

#ifndef GOALPOSE_EPISODE_HPP_
#define GOALPOSE_EPISODE_HPP_

// Episode record and its on-disk layout:
//
//   <dir>/<id>.json               the episode document (schema goalpose.episode/1)
//   <dir>/<id>_frames/round_NN.png observation shown to the policy in round NN
//
// Image paths inside the document are relative to <dir>.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/codec.hpp"
#include "goalpose/error.hpp"
#include "goalpose/protocol.hpp"
#include "goalpose/task.hpp"
#include "goalpose/world.hpp"

namespace goalpose {

enum class Outcome { kSuccess, kFailure, kMaxRounds, kParseAbort };
enum class EpisodeMode { kAuto, kGuided };

inline std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kSuccess: return "success";
    case Outcome::kFailure: return "failure";
    case Outcome::kMaxRounds: return "max_rounds";
    case Outcome::kParseAbort: return "parse_abort";
  }
  return "failure";
}

inline Outcome outcome_from_string(std::string_view s) {
  if (s == "success") return Outcome::kSuccess;
  if (s == "failure") return Outcome::kFailure;
  if (s == "max_rounds") return Outcome::kMaxRounds;
  if (s == "parse_abort") return Outcome::kParseAbort;
  throw Error(Errc::kSchemaViolation, "unknown outcome '" + std::string(s) + "'");
}

inline std::string_view mode_name(EpisodeMode m) {
  return m == EpisodeMode::kGuided ? "guided" : "auto";
}

inline EpisodeMode mode_from_string(std::string_view s) {
  if (s == "auto") return EpisodeMode::kAuto;
  if (s == "guided") return EpisodeMode::kGuided;
  throw Error(Errc::kInvalidArgument, "unknown mode '" + std::string(s) + "'");
}

struct ErrorNote {
  std::string code;  // errc_name
  std::string message;
  bool operator==(const ErrorNote&) const = default;
};

inline ErrorNote note_of(const Error& e) {
  return {std::string(errc_name(e.code())), e.what()};
}

struct Round {
  int index = 1;
  std::string scene_text;
  ImageRef image;
  std::optional<std::string> guidance;
  std::string assistant_text;
  std::optional<ParsedResponse> parsed;
  std::optional<ErrorNote> parse_error;
  std::optional<StepOutcome> step;
  std::optional<ErrorNote> step_error;  // apply_goal rejected the goal
  bool success_after = false;
  std::string world_hash;  // sha256 of the world document after this round
  double latency = 0.0;
};

struct Episode {
  std::string id;
  TaskSpec task;
  std::uint64_t seed = 0;
  EpisodeMode mode = EpisodeMode::kAuto;
  Representation representation = Representation::kAxis;
  std::vector<Round> rounds;
  Outcome outcome = Outcome::kFailure;
  std::optional<ErrorNote> error;  // policy failure that ended the episode
  std::string created_at;
  nlohmann::json config = nlohmann::json::object();

  // Directory image paths are relative to; empty while the episode is in
  // memory with its frames attached.
  std::string root;
};

inline std::string default_episode_id(const TaskSpec& task, std::uint64_t seed) {
  return fmt::format("{}_s{}", task.id(), seed);
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string world_hash(const WorldState& w) {
  return sha256_hex(world_to_json(w).dump());
}

inline std::string frame_path(const std::string& episode_id, int round) {
  return fmt::format("{}_frames/round_{:02d}.png", episode_id, round);
}

// PNG bytes of an image, from memory or from disk under `root`.
inline Bytes image_bytes(const ImageRef& img, const std::string& root) {
  if (img.png) return *img.png;
  const std::filesystem::path p =
      root.empty() ? std::filesystem::path(img.path) : std::filesystem::path(root) / img.path;
  const std::string data = read_file(p.string());
  return Bytes(data.begin(), data.end());
}

// The conversation as the policy saw it (guidance still in user turns).
inline ConversationState conversation_of(const Episode& e) {
  ConversationState c;
  c.base_prompt = std::string(base_prompt_template(e.representation));
  c.task_text = std::string(e.task.instruction());
  for (const Round& r : e.rounds) {
    c.turns.push_back({r.scene_text, r.image, r.guidance, r.assistant_text});
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON

inline constexpr const char* kEpisodeSchema = "goalpose.episode/1";

inline void to_json(nlohmann::json& j, const ErrorNote& n) {
  j = {{"code", n.code}, {"message", n.message}};
}
inline void from_json(const nlohmann::json& j, ErrorNote& n) {
  n.code = j.at("code");
  n.message = j.at("message");
}

namespace detail {
template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
template <typename T>
std::optional<T> json_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}
}  // namespace detail

inline nlohmann::json round_to_json(const Round& r) {
  using detail::opt_json;
  return {{"index", r.index},
          {"scene_text", r.scene_text},
          {"image", r.image.path},
          {"guidance", opt_json(r.guidance)},
          {"assistant_text", r.assistant_text},
          {"parsed", opt_json(r.parsed)},
          {"parse_error", opt_json(r.parse_error)},
          {"step", opt_json(r.step)},
          {"step_error", opt_json(r.step_error)},
          {"success_after", r.success_after},
          {"world_hash", r.world_hash},
          {"latency", r.latency}};
}

inline Round round_from_json(const nlohmann::json& j) {
  using detail::json_opt;
  Round r;
  r.index = j.at("index");
  r.scene_text = j.at("scene_text");
  r.image.path = j.at("image");
  r.guidance = json_opt<std::string>(j, "guidance");
  r.assistant_text = j.at("assistant_text");
  r.parsed = json_opt<ParsedResponse>(j, "parsed");
  r.parse_error = json_opt<ErrorNote>(j, "parse_error");
  r.step = json_opt<StepOutcome>(j, "step");
  r.step_error = json_opt<ErrorNote>(j, "step_error");
  r.success_after = j.at("success_after");
  r.world_hash = j.at("world_hash");
  r.latency = j.at("latency");
  return r;
}

inline nlohmann::json episode_to_json(const Episode& e) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const Round& r : e.rounds) rounds.push_back(round_to_json(r));
  return {{"schema", kEpisodeSchema},
          {"id", e.id},
          {"task", e.task},
          {"seed", e.seed},
          {"mode", mode_name(e.mode)},
          {"representation", representation_name(e.representation)},
          {"prompt_template", kPromptTemplateVersion},
          {"outcome", outcome_name(e.outcome)},
          {"error", detail::opt_json(e.error)},
          {"created_at", e.created_at},
          {"config", e.config},
          {"rounds", rounds}};
}

inline Episode episode_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kEpisodeSchema) {
    throw Error(Errc::kSchemaViolation, "not a goalpose.episode/1 document");
  }
  try {
    Episode e;
    e.id = j.at("id");
    e.task = j.at("task").get<TaskSpec>();
    e.seed = j.at("seed");
    e.mode = mode_from_string(j.at("mode").get<std::string>());
    e.representation = representation_from_string(j.at("representation").get<std::string>());
    e.outcome = outcome_from_string(j.at("outcome").get<std::string>());
    e.error = detail::json_opt<ErrorNote>(j, "error");
    e.created_at = j.at("created_at");
    e.config = j.at("config");
    for (const auto& r : j.at("rounds")) e.rounds.push_back(round_from_json(r));
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kSchemaViolation, ex.what());
  }
}

// Writes <dir>/<id>.json and the frames; returns the JSON path.
inline std::string save_episode(const Episode& e, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / (e.id + "_frames"), ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir + ": " + ec.message());
  Episode copy = e;
  for (Round& r : copy.rounds) {
    const std::string rel = frame_path(e.id, r.index);
    const fs::path dst = fs::path(dir) / rel;
    const bool same_file = !e.root.empty() && !r.image.png &&
                           fs::exists(dst) && fs::exists(fs::path(e.root) / r.image.path) &&
                           fs::equivalent(dst, fs::path(e.root) / r.image.path);
    if (!r.image.png && r.image.path.empty()) continue;  // no frame recorded
    if (!same_file) write_file(dst.string(), image_bytes(r.image, e.root));
    r.image.path = rel;
  }
  const std::string path = (fs::path(dir) / (e.id + ".json")).string();
  write_file(path, episode_to_json(copy).dump(2) + "\n");
  return path;
}

inline Episode load_episode(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(Errc::kSchemaViolation, path + ": " + ex.what());
  }
  Episode e = episode_from_json(j);
  e.root = std::filesystem::path(path).parent_path().string();
  return e;
}

}  // namespace goalpose

#endif  // GOALPOSE_EPISODE_HPP_
