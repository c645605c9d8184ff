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

#ifndef GOALPOSE_DATASET_HPP_
#define GOALPOSE_DATASET_HPP_

// SFT export of successful episodes, corpus statistics and conversation
// replay.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/episode.hpp"
#include "goalpose/orchestrator.hpp"
#include "goalpose/records.hpp"
#include "goalpose/world.hpp"

namespace goalpose {

inline constexpr const char* kSftDataFile = "conversations.jsonl";

inline nlohmann::json conversation_to_json(const TrainingConversation& c, const ExportOptions& opts,
                                           RecordImages& sink) {
  return {{"schema", kSftSchemaId},
          {"id", c.id},
          {"task", c.task.id()},
          {"task_params", c.task.params},
          {"seed", c.seed},
          {"source_episode", c.source_episode},
          {"representation", representation_name(c.representation)},
          {"messages", messages_to_json(c.messages, c.id, c.root, opts, sink)}};
}

inline TrainingConversation conversation_from_json(const nlohmann::json& j, const std::string& root) {
  TrainingConversation c;
  c.id = j.at("id");
  c.task = TaskSpec::from_string(j.at("task").get<std::string>());
  j.at("task_params").get_to(c.task.params);
  c.seed = j.at("seed");
  c.source_episode = j.at("source_episode");
  c.representation = representation_from_string(j.at("representation").get<std::string>());
  c.messages = messages_from_json(j.at("messages"));
  c.root = root;
  return c;
}

// Writes already-reverted conversations. Used by export_sft and to re-export
// a loaded corpus.
inline Manifest export_conversations(const std::vector<TrainingConversation>& convs,
                                     const std::string& dir, const ExportOptions& opts = {},
                                     int skipped = 0) {
  Manifest m;
  m.kind = "sft";
  m.data = kSftDataFile;
  m.skipped = skipped;
  m.inline_images = opts.inline_images;
  std::set<std::string> ids;
  std::vector<nlohmann::json> lines;
  RecordImages images;
  for (const auto& c : convs) {
    if (!ids.insert(c.id).second) {
      throw Error(Errc::kInvalidArgument, "duplicate conversation id " + c.id);
    }
    check_conversation(c.messages, c.representation, true);
    lines.push_back(conversation_to_json(c, opts, images));
    ++m.per_task[std::string(c.task.id())];
  }
  return write_export(dir, std::move(m), lines, std::move(images));
}

// Keeps successful episodes only, reverts roles and writes the corpus into
// `dir`. Everything else is counted as skipped.
inline Manifest export_sft(const std::vector<Episode>& episodes, const std::string& dir,
                           const ExportOptions& opts = {}, const PromptOptions& prompt = {}) {
  std::vector<TrainingConversation> convs;
  int skipped = 0;
  for (const Episode& e : episodes) {
    if (e.outcome != Outcome::kSuccess) {
      ++skipped;
      continue;
    }
    convs.push_back(revert_roles(e, prompt));
  }
  return export_conversations(convs, dir, opts, skipped);
}

// `path` is an export directory or a JSONL file.
inline std::string resolve_data_file(const std::string& path, const char* default_name) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) return path;
  if (fs::exists(fs::path(path) / kManifestFile)) {
    return (fs::path(path) / load_manifest(path).data).string();
  }
  return (fs::path(path) / default_name).string();
}

inline std::vector<TrainingConversation> load_sft(const std::string& path) {
  const std::string file = resolve_data_file(path, kSftDataFile);
  const std::string root = std::filesystem::path(file).parent_path().string();
  std::vector<TrainingConversation> out;
  for (const auto& j : read_jsonl(file, kSftSchemaId)) out.push_back(conversation_from_json(j, root));
  return out;
}

struct DatasetStats {
  int conversations = 0;
  std::map<std::string, int> per_task;
  std::map<int, int> rounds_histogram;  // assistant turns -> conversations
  int assistant_messages = 0;
  double mean_assistant_tokens = 0.0;  // whitespace-separated, per assistant message
  int images = 0;
};

inline int whitespace_tokens(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

// Reads SFT or rollout records; any line failing its schema raises
// SchemaViolation naming the line.
inline DatasetStats dataset_stats(const std::string& path) {
  DatasetStats s;
  long tokens = 0;
  for (const auto& j : read_jsonl(resolve_data_file(path, kSftDataFile))) {
    ++s.conversations;
    ++s.per_task[j["task"].get<std::string>()];
    int rounds = 0;
    for (const auto& m : j["messages"]) {
      s.images += static_cast<int>(m["images"].size());
      if (m["role"] == "assistant") {
        ++rounds;
        tokens += whitespace_tokens(m["content"].get<std::string>());
      }
    }
    s.assistant_messages += rounds;
    ++s.rounds_histogram[rounds];
  }
  if (s.assistant_messages > 0) {
    s.mean_assistant_tokens = static_cast<double>(tokens) / s.assistant_messages;
  }
  return s;
}

inline void to_json(nlohmann::json& j, const DatasetStats& s) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : s.rounds_histogram) hist[std::to_string(k)] = v;
  j = {{"conversations", s.conversations}, {"per_task", s.per_task},
       {"rounds_histogram", hist},         {"assistant_messages", s.assistant_messages},
       {"mean_assistant_tokens", s.mean_assistant_tokens}, {"images", s.images}};
}

struct ConversationReplay {
  bool success = false;
  int rounds = 0;
  int parse_failures = 0;
  int step_errors = 0;
};

// Pulls the ACTION out of every assistant turn and executes the sequence on
// world_init(task, seed), following the episode loop's rules: unparseable
// turns and rejected goals are skipped.
inline ConversationReplay replay_conversation(const TrainingConversation& c) {
  ConversationReplay r;
  WorldState w = world_init(c.task, c.seed);
  for (const Message& m : c.messages) {
    if (m.role != Role::kAssistant) continue;
    ++r.rounds;
    GripperGoal goal;
    try {
      goal = parse_response(m.text, c.representation).goal;
    } catch (const Error&) {
      ++r.parse_failures;
      continue;
    }
    try {
      apply_goal(w, goal);
    } catch (const Error&) {
      ++r.step_errors;
    }
  }
  r.success = evaluate_success(w);
  return r;
}

}  // namespace goalpose

#endif  // GOALPOSE_DATASET_HPP_
