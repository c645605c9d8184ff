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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "goalpose/dataset.hpp"
#include "goalpose/jsonschema.hpp"
#include "goalpose/schemas.hpp"
#include "support/fixtures.hpp"

namespace goalpose {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::scratch;
using testing::ScriptedPolicy;

std::string slurp(const fs::path& p) { return read_file(p.string()); }

// --- schema checker ---------------------------------------------------------

TEST(JsonSchema, Keywords) {
  const JsonSchema s(json::parse(R"({
    "type": "object", "required": ["a"], "additionalProperties": false,
    "properties": {
      "a": {"type": "integer", "minimum": 0, "maximum": 3},
      "b": {"type": "array", "minItems": 1, "maxItems": 2, "items": {"$ref": "#/$defs/s"}},
      "c": {"enum": ["x", 1]},
      "d": {"anyOf": [{"type": "string", "pattern": "^q"}, {"type": "null"}]},
      "e": {"const": true}
    },
    "$defs": {"s": {"type": "string", "minLength": 2}}
  })"));
  EXPECT_TRUE(s.valid(json::parse(R"({"a": 2, "b": ["ab"], "c": 1, "d": null, "e": true})")));
  EXPECT_TRUE(s.valid(json::parse(R"({"a": 2.0, "d": "qq"})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"b": ["ab"]})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 4})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1.5})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "b": []})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "b": ["a"]})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "b": ["ab", "cd", "ef"]})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "c": "y"})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "d": "xq"})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "e": false})")));
  EXPECT_FALSE(s.valid(json::parse(R"({"a": 1, "z": 0})")));
  const auto errs = s.errors(json::parse(R"({"a": 1, "b": [3]})"));
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].rfind("/b/0:", 0), 0u) << errs[0];
}

TEST(JsonSchema, UnknownKeywordRejected) {
  EXPECT_THROW(JsonSchema(json::parse(R"({"type": "object", "oneOf": []})")), Error);
  EXPECT_THROW(JsonSchema(json::parse(R"({"properties": {"a": {"format": "uri"}}})")), Error);
}

TEST(Schemas, EmbeddedCopiesMatchDocs) {
  const fs::path dir = fs::path(GOALPOSE_SOURCE_DIR) / "docs" / "schemas";
  const std::pair<const char*, std::string_view> files[] = {
      {"sft_record.schema.json", schemas::kSftRecord},
      {"rollout_record.schema.json", schemas::kRolloutRecord},
      {"manifest.schema.json", schemas::kManifest},
      {"logprobs.schema.json", schemas::kLogprobs}};
  for (const auto& [name, embedded] : files) {
    EXPECT_EQ(slurp(dir / name), embedded) << name << " drifted; rerun tools/embed_schemas.py";
  }
  EXPECT_EQ(schema_by_id(kSftSchemaId).valid(json::object()), false);
}

// --- export -------------------------------------------------------------------

std::vector<Episode> mixed_batch() {
  // 10 episodes: oracle on 6 (one per task but drawer_close), garbage on 4.
  OraclePolicy oracle;
  ScriptedPolicy garbage([](const PolicyContext&) { return std::string("nothing"); });
  std::vector<Episode> eps;
  for (int i = 0; i < 6; ++i) eps.push_back(run_episode(TaskSpec::make(kAllTasks[i]), i, oracle));
  for (int i = 0; i < 4; ++i) {
    EpisodeOptions o;
    o.id = "garbage_" + std::to_string(i);
    eps.push_back(run_episode(TaskSpec::make(TaskName::kLiftCan), i, garbage, o));
  }
  return eps;
}

TEST(ExportSft, FiltersSuccesses) {
  const auto eps = mixed_batch();
  const fs::path dir = scratch("sft_counts");
  const Manifest m = export_sft(eps, dir.string());
  EXPECT_EQ(m.records, 6);
  EXPECT_EQ(m.skipped, 4);
  EXPECT_EQ(m.per_task.size(), 6u);
  EXPECT_EQ(m.per_task.at("lift_can"), 1);
  const auto lines = read_jsonl((dir / kSftDataFile).string());
  ASSERT_EQ(lines.size(), 6u);
  for (const auto& l : lines) {
    EXPECT_TRUE(schema_by_id(kSftSchemaId).valid(l));
    for (const auto& msg : l["messages"]) {
      for (const auto& img : msg["images"]) EXPECT_TRUE(fs::exists(dir / img.get<std::string>()));
    }
  }
  EXPECT_EQ(lines[0]["messages"][1]["images"][0], "images/lift_can_s0/round_01.png");
  EXPECT_EQ(load_manifest(dir.string()).sha256, m.sha256);
}

TEST(ExportSft, IdempotentAndOrderStable) {
  const auto eps = mixed_batch();
  const fs::path a = scratch("sft_idem_a");
  const fs::path b = scratch("sft_idem_b");
  export_sft(eps, a.string());
  export_sft(eps, a.string());
  export_sft(eps, b.string());
  EXPECT_EQ(slurp(a / kSftDataFile), slurp(b / kSftDataFile));
  EXPECT_EQ(slurp(a / kManifestFile), slurp(b / kManifestFile));
  // reload + re-export is byte-identical as well
  const fs::path c = scratch("sft_idem_c");
  export_conversations(load_sft(a.string()), c.string(), {}, 4);
  EXPECT_EQ(slurp(a / kSftDataFile), slurp(c / kSftDataFile));
  EXPECT_EQ(slurp(a / kManifestFile), slurp(c / kManifestFile));
}

TEST(ExportSft, GuidedEpisodeCarriesGuidanceInAssistantTurn) {
  const Episode e = testing::guided_fixture_episode();
  ASSERT_EQ(e.outcome, Outcome::kSuccess);
  const fs::path dir = scratch("sft_guided");
  export_sft({e}, dir.string());
  const auto convs = load_sft(dir.string());
  ASSERT_EQ(convs.size(), 1u);
  const auto& msgs = convs[0].messages;
  EXPECT_EQ(msgs[4].role, Role::kAssistant);
  EXPECT_EQ(msgs[4].text.rfind(std::string(testing::kFixtureGuidance) + "\n\n", 0), 0u);
  for (const auto& m : msgs) {
    if (m.role == Role::kUser) EXPECT_EQ(m.text.find(testing::kFixtureGuidance), std::string::npos);
  }
  EXPECT_TRUE(replay_conversation(convs[0]).success);
}

TEST(ExportSft, InlinedVariant) {
  OraclePolicy oracle;
  const Episode e = run_episode(TaskSpec::make(TaskName::kLiftCan), 3, oracle);
  const fs::path dir = scratch("sft_inline");
  const Manifest m = export_sft({e}, dir.string(), {true});
  EXPECT_EQ(m.images, 0);
  const auto convs = load_sft(dir.string());
  EXPECT_EQ(*convs[0].messages[1].images[0].png, *e.rounds[0].image.png);
  EXPECT_TRUE(replay_conversation(convs[0]).success);
}

TEST(ExportSft, ExportsFromSavedEpisodes) {
  OraclePolicy oracle;
  const fs::path eps = scratch("sft_saved_eps");
  const Episode e = run_episode(TaskSpec::make(TaskName::kStackCube), 2, oracle);
  const Episode loaded = load_episode(save_episode(e, eps.string()));
  const fs::path a = scratch("sft_from_memory");
  const fs::path b = scratch("sft_from_disk");
  export_sft({e}, a.string());
  export_sft({loaded}, b.string());
  EXPECT_EQ(slurp(a / kSftDataFile), slurp(b / kSftDataFile));
  EXPECT_EQ(slurp(a / "images/stack_cube_s2/round_03.png"), slurp(b / "images/stack_cube_s2/round_03.png"));
}

TEST(ExportSft, DuplicateIdsRejected) {
  OraclePolicy oracle;
  const Episode e = run_episode(TaskSpec::make(TaskName::kLiftCan), 0, oracle);
  EXPECT_THROW(export_sft({e, e}, scratch("sft_dup").string()), Error);
}

// --- stats and validation -----------------------------------------------------

TEST(DatasetStats, EmptyFileIsZero) {
  const fs::path dir = scratch("stats_empty");
  write_file((dir / "empty.jsonl").string(), std::string());
  const DatasetStats s = dataset_stats((dir / "empty.jsonl").string());
  EXPECT_EQ(s.conversations, 0);
  EXPECT_TRUE(s.per_task.empty());
  EXPECT_TRUE(s.rounds_histogram.empty());
  EXPECT_EQ(s.mean_assistant_tokens, 0.0);
  EXPECT_EQ(s.images, 0);
}

TEST(DatasetStats, CountsAndHistogram) {
  const fs::path dir = scratch("stats_counts");
  const auto eps = mixed_batch();
  const Manifest m = export_sft(eps, dir.string());
  const DatasetStats s = dataset_stats(dir.string());
  EXPECT_EQ(s.conversations, 6);
  EXPECT_EQ(s.per_task, m.per_task);
  std::map<int, int> hist;
  int rounds = 0;
  for (const Episode& e : eps) {
    if (e.outcome != Outcome::kSuccess) continue;
    ++hist[static_cast<int>(e.rounds.size())];
    rounds += static_cast<int>(e.rounds.size());
  }
  EXPECT_EQ(s.rounds_histogram, hist);
  EXPECT_EQ(s.assistant_messages, rounds);
  EXPECT_EQ(s.images, rounds);  // one frame per round
  // independent whitespace count
  long words = 0;
  for (const auto& c : load_sft(dir.string())) {
    for (const auto& msg : c.messages) {
      if (msg.role != Role::kAssistant) continue;
      std::istringstream in(msg.text);
      std::string w;
      while (in >> w) ++words;
    }
  }
  EXPECT_DOUBLE_EQ(s.mean_assistant_tokens, static_cast<double>(words) / rounds);
}

TEST(DatasetStats, CorruptedLineReported) {
  const fs::path dir = scratch("stats_corrupt");
  export_sft(mixed_batch(), dir.string());
  std::string text = slurp(dir / kSftDataFile);
  // line 3: break the JSON
  std::size_t at = 0;
  for (int i = 0; i < 2; ++i) at = text.find('\n', at) + 1;
  text.insert(at, "{oops");
  write_file((dir / kSftDataFile).string(), text);
  try {
    dataset_stats(dir.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSchemaViolation);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(DatasetStats, SchemaAndStructureViolations) {
  const fs::path dir = scratch("stats_schema");
  export_sft(mixed_batch(), dir.string());
  const auto lines = read_jsonl((dir / kSftDataFile).string());
  auto expect_violation_at_2 = [&](json bad) {
    std::string text = lines[0].dump() + "\n" + bad.dump() + "\n";
    write_file((dir / "bad.jsonl").string(), text);
    try {
      dataset_stats((dir / "bad.jsonl").string());
      ADD_FAILURE() << bad.dump().substr(0, 200);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kSchemaViolation);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  };
  json j = lines[1];
  j.erase("seed");
  expect_violation_at_2(j);
  j = lines[1];
  j["task"] = "juggle";
  expect_violation_at_2(j);
  j = lines[1];
  std::swap(j["messages"][1], j["messages"][2]);  // assistant before user
  expect_violation_at_2(j);
  j = lines[1];
  j["messages"][1]["images"] = json::array();  // token without image
  expect_violation_at_2(j);
  j = lines[1];
  j["messages"][1]["content"] = "hello <image>";  // no base prompt
  expect_violation_at_2(j);
  j = lines[1];
  j["messages"].erase(j["messages"].size() - 1);  // unanswered last turn
  expect_violation_at_2(j);
}

TEST(ReplayConversation, OracleCorpusReplays) {
  OraclePolicy oracle;
  std::vector<Episode> eps;
  for (TaskName t : kAllTasks) {
    for (std::uint64_t s = 0; s < 3; ++s) eps.push_back(run_episode(TaskSpec::make(t), s, oracle));
  }
  const fs::path dir = scratch("sft_replay");
  export_sft(eps, dir.string());
  const auto convs = load_sft(dir.string());
  ASSERT_EQ(convs.size(), 21u);
  for (const auto& c : convs) {
    const ConversationReplay r = replay_conversation(c);
    EXPECT_TRUE(r.success) << c.id;
    EXPECT_EQ(r.parse_failures, 0);
  }
}

TEST(ReplayConversation, TruncatedConversationFails) {
  OraclePolicy oracle;
  TrainingConversation c = revert_roles(run_episode(TaskSpec::make(TaskName::kStackCube), 0, oracle));
  c.messages.resize(c.messages.size() - 2);
  EXPECT_FALSE(replay_conversation(c).success);
}

}  // namespace
}  // namespace goalpose
