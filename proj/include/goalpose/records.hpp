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

#ifndef GOALPOSE_RECORDS_HPP_
#define GOALPOSE_RECORDS_HPP_

// Shared plumbing for the line-delimited exports (SFT conversations and GRPO
// rollouts): message encoding, image files, manifests, schema lookup.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/codec.hpp"
#include "goalpose/episode.hpp"
#include "goalpose/error.hpp"
#include "goalpose/jsonschema.hpp"
#include "goalpose/protocol.hpp"
#include "goalpose/schemas.hpp"

namespace goalpose {

inline constexpr const char* kSftSchemaId = "goalpose.sft/1";
inline constexpr const char* kRolloutSchemaId = "goalpose.rollout/1";
inline constexpr const char* kManifestSchemaId = "goalpose.manifest/1";
inline constexpr const char* kLogProbsSchemaId = "goalpose.logprobs/1";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr std::string_view kDataUrlPrefix = "data:image/png;base64,";

// Schema by its "$id" (the value records carry in their "schema" field).
inline const JsonSchema& schema_by_id(std::string_view id) {
  static const JsonSchema sft(nlohmann::json::parse(schemas::kSftRecord));
  static const JsonSchema rollout(nlohmann::json::parse(schemas::kRolloutRecord));
  static const JsonSchema manifest(nlohmann::json::parse(schemas::kManifest));
  static const JsonSchema logprobs(nlohmann::json::parse(schemas::kLogprobs));
  if (id == kSftSchemaId) return sft;
  if (id == kRolloutSchemaId) return rollout;
  if (id == kManifestSchemaId) return manifest;
  if (id == kLogProbsSchemaId) return logprobs;
  throw Error(Errc::kSchemaViolation, "unknown schema '" + std::string(id) + "'");
}

struct ExportOptions {
  // Embed PNGs as data URLs instead of writing images/<id>/round_NN.png.
  bool inline_images = false;
};

struct Manifest {
  std::string kind;  // "sft" or "rollouts"
  std::string data;  // JSONL file name, relative to the manifest
  int records = 0;
  int skipped = 0;
  std::optional<int> groups;
  std::map<std::string, int> per_task;
  int images = 0;
  bool inline_images = false;
  std::string sha256;  // over the JSONL bytes and every image file
};

inline void to_json(nlohmann::json& j, const Manifest& m) {
  j = {{"schema", kManifestSchemaId}, {"kind", m.kind},        {"data", m.data},
       {"records", m.records},        {"skipped", m.skipped},  {"per_task", m.per_task},
       {"images", m.images},          {"inline_images", m.inline_images},
       {"sha256", m.sha256}};
  if (m.groups) j["groups"] = *m.groups;
}

inline void from_json(const nlohmann::json& j, Manifest& m) {
  schema_by_id(kManifestSchemaId).require(j, "manifest");
  m.kind = j.at("kind");
  m.data = j.at("data");
  m.records = j.at("records");
  m.skipped = j.at("skipped");
  m.groups = j.contains("groups") ? std::optional<int>(j["groups"].get<int>()) : std::nullopt;
  m.per_task = j.at("per_task").get<std::map<std::string, int>>();
  m.images = j.at("images");
  m.inline_images = j.at("inline_images");
  m.sha256 = j.at("sha256");
}

// A record's messages plus where their relative image paths resolve.
struct RecordImages {
  std::vector<std::pair<std::string, Bytes>> files;  // relative path, bytes
};

namespace records_detail {

inline std::size_t count_tokens(std::string_view text, std::string_view token) {
  std::size_t n = 0;
  for (auto at = text.find(token); at != std::string_view::npos; at = text.find(token, at + 1)) ++n;
  return n;
}

}  // namespace records_detail

// Encodes messages for a record named `id`. User message r (1-based) stores
// its image as images/<id>/round_NN.png; the bytes are appended to `sink`.
inline nlohmann::json messages_to_json(const std::vector<Message>& msgs, const std::string& id,
                                       const std::string& root, const ExportOptions& opts,
                                       RecordImages& sink) {
  nlohmann::json out = nlohmann::json::array();
  int user_round = 0;
  for (const Message& m : msgs) {
    nlohmann::json images = nlohmann::json::array();
    if (m.role == Role::kUser) ++user_round;
    if (m.images.size() > 1) {
      throw Error(Errc::kInvalidArgument, fmt::format("{}: more than one image in a message", id));
    }
    for (const ImageRef& img : m.images) {
      Bytes png = image_bytes(img, root);
      if (opts.inline_images) {
        images.push_back(std::string(kDataUrlPrefix) + base64_encode(png));
      } else {
        std::string rel = fmt::format("images/{}/round_{:02d}.png", id, user_round);
        images.push_back(rel);
        sink.files.emplace_back(std::move(rel), std::move(png));
      }
    }
    out.push_back({{"role", role_name(m.role)}, {"content", m.text}, {"images", images}});
  }
  return out;
}

inline std::vector<Message> messages_from_json(const nlohmann::json& arr) {
  std::vector<Message> out;
  for (const auto& j : arr) {
    Message m{role_from_string(j.at("role").get<std::string>()), j.at("content"), {}};
    for (const auto& img : j.at("images")) {
      const std::string s = img.get<std::string>();
      if (s.rfind(kDataUrlPrefix, 0) == 0) {
        m.images.push_back({"", std::make_shared<const Bytes>(
                                    base64_decode(std::string_view(s).substr(kDataUrlPrefix.size())))});
      } else {
        m.images.push_back({s, nullptr});
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

// Structural rules the schema cannot express: optional leading system
// message, then user/assistant alternation starting with a user turn, one
// <image> token per attached image, assistant turns without images, and a
// first user turn carrying the base prompt's fixed text.
inline void check_conversation(const std::vector<Message>& msgs, Representation rep,
                               bool require_rounds) {
  std::size_t i = 0;
  if (i < msgs.size() && msgs[i].role == Role::kSystem) ++i;
  if (require_rounds && i == msgs.size()) {
    throw Error(Errc::kSchemaViolation, "conversation has no rounds");
  }
  bool first_user = true;
  for (std::size_t k = i; k < msgs.size(); ++k) {
    const Message& m = msgs[k];
    const Role want = (k - i) % 2 == 0 ? Role::kUser : Role::kAssistant;
    if (m.role != want) {
      throw Error(Errc::kSchemaViolation,
                  fmt::format("message {}: expected {}, got {}", k, role_name(want),
                              role_name(m.role)));
    }
    if (records_detail::count_tokens(m.text, kImageToken) != m.images.size()) {
      throw Error(Errc::kSchemaViolation,
                  fmt::format("message {}: {} image tokens for {} images", k,
                              records_detail::count_tokens(m.text, kImageToken), m.images.size()));
    }
    if (m.role == Role::kUser && first_user) {
      first_user = false;
      const std::string_view tpl = base_prompt_template(rep);
      std::size_t from = 0, pos = 0;
      while (pos <= tpl.size()) {
        const auto slot = tpl.find("{}", pos);
        const std::string_view piece = tpl.substr(pos, slot == std::string_view::npos ? slot : slot - pos);
        const auto at = m.text.find(piece, from);
        if (at == std::string::npos) {
          throw Error(Errc::kSchemaViolation, "first user message does not carry the base prompt");
        }
        from = at + piece.size();
        if (slot == std::string_view::npos) break;
        pos = slot + 2;
      }
    }
  }
  if ((msgs.size() - i) % 2 != 0) {
    throw Error(Errc::kSchemaViolation, "conversation ends on an unanswered user turn");
  }
}

// Writes the JSONL, the image files and manifest.json into `dir`. Output
// depends only on the inputs, so repeated exports are byte-identical.
inline Manifest write_export(const std::string& dir, Manifest m,
                             const std::vector<nlohmann::json>& lines, RecordImages images) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir + ": " + ec.message());
  std::string jsonl;
  for (const auto& l : lines) jsonl += l.dump() + "\n";
  std::sort(images.files.begin(), images.files.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string digest_input = sha256_hex(jsonl) + "\n";
  for (const auto& [rel, bytes] : images.files) {
    const fs::path dst = fs::path(dir) / rel;
    fs::create_directories(dst.parent_path(), ec);
    if (ec) throw Error(Errc::kIo, "cannot create " + dst.parent_path().string());
    write_file(dst.string(), bytes);
    digest_input += rel + " " +
                    sha256_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())) +
                    "\n";
  }
  write_file((fs::path(dir) / m.data).string(), jsonl);
  m.records = static_cast<int>(lines.size());
  m.images = static_cast<int>(images.files.size());
  m.sha256 = sha256_hex(digest_input);
  write_file((fs::path(dir) / kManifestFile).string(), nlohmann::json(m).dump(2) + "\n");
  return m;
}

inline Manifest load_manifest(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / kManifestFile).string();
  try {
    return nlohmann::json::parse(read_file(path)).get<Manifest>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::kSchemaViolation, path + ": " + ex.what());
  }
}

// Parses a JSONL file, validating each line against the schema named by its
// "schema" field (or `expected` when given). Errors carry the 1-based line.
inline std::vector<nlohmann::json> read_jsonl(const std::string& path,
                                              std::string_view expected = {}) {
  const std::string text = read_file(path);
  std::vector<nlohmann::json> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = fmt::format("{}:{}", path, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw Error(Errc::kSchemaViolation, fmt::format("line {}: not JSON ({})", line_no, ex.what()));
    }
    std::string id;
    if (!expected.empty()) {
      id = std::string(expected);
    } else if (j.is_object() && j.contains("schema") && j["schema"].is_string()) {
      id = j["schema"].get<std::string>();
    } else {
      throw Error(Errc::kSchemaViolation, fmt::format("line {}: no schema field", line_no));
    }
    try {
      schema_by_id(id).require(j);
      check_conversation(messages_from_json(j["messages"]),
                         representation_from_string(j["representation"].get<std::string>()),
                         id == kSftSchemaId);
    } catch (const Error& ex) {
      throw Error(Errc::kSchemaViolation, fmt::format("line {}: {}", line_no, ex.detail()));
    }
    out.push_back(std::move(j));
  }
  return out;
}

// Re-checks an export directory: every line against its schema, the
// manifest counts, that every referenced image exists, and the content hash.
inline Manifest verify_export(const std::string& dir) {
  namespace fs = std::filesystem;
  const Manifest m = load_manifest(dir);
  const std::string expected = m.kind == "sft" ? kSftSchemaId : kRolloutSchemaId;
  const std::string data = (fs::path(dir) / m.data).string();
  const auto lines = read_jsonl(data, expected);
  auto fail = [&](const std::string& what) {
    throw Error(Errc::kSchemaViolation, fmt::format("{}: {}", dir, what));
  };
  if (static_cast<int>(lines.size()) != m.records) {
    fail(fmt::format("manifest says {} records, file has {}", m.records, lines.size()));
  }
  std::map<std::string, int> per_task;
  std::vector<std::string> images;
  for (const auto& j : lines) {
    ++per_task[j["task"].get<std::string>()];
    for (const auto& msg : j["messages"]) {
      for (const auto& img : msg["images"]) {
        const std::string s = img.get<std::string>();
        if (s.rfind(kDataUrlPrefix, 0) == 0) {
          if (!m.inline_images) fail("inlined image in a path-based export");
          continue;
        }
        if (m.inline_images) fail("image path in an inlined export");
        if (!fs::is_regular_file(fs::path(dir) / s)) fail("missing image " + s);
        images.push_back(s);
      }
    }
  }
  if (per_task != m.per_task) fail("per-task counts differ from the manifest");
  if (static_cast<int>(images.size()) != m.images) {
    fail(fmt::format("manifest lists {} images, records reference {}", m.images, images.size()));
  }
  std::sort(images.begin(), images.end());
  std::string digest_input = sha256_hex(read_file(data)) + "\n";
  for (const auto& rel : images) {
    digest_input += rel + " " + sha256_hex(read_file((fs::path(dir) / rel).string())) + "\n";
  }
  if (sha256_hex(digest_input) != m.sha256) fail("content hash mismatch");
  return m;
}

}  // namespace goalpose

#endif  // GOALPOSE_RECORDS_HPP_
