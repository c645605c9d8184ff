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

#ifndef GOALPOSE_TESTS_FIXTURES_HPP_
#define GOALPOSE_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "goalpose/oracle.hpp"
#include "goalpose/orchestrator.hpp"

namespace goalpose::testing {

// Answers from a function of the query context.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::function<std::string(const PolicyContext&)> f) : f_(std::move(f)) {}
  PolicyReply complete(const std::vector<Message>&, const PolicyContext& ctx) override {
    return {f_(ctx), 0.0, std::nullopt, 0};
  }
  nlohmann::json describe() const override { return {{"kind", "scripted"}}; }

 private:
  std::function<std::string(const PolicyContext&)> f_;
};

// Oracle on the samples whose index passes `keep`, nonsense elsewhere.
class MixedPolicy : public Policy {
 public:
  explicit MixedPolicy(std::function<bool(int)> keep) : keep_(std::move(keep)) {}
  PolicyReply complete(const std::vector<Message>& m, const PolicyContext& ctx) override {
    if (keep_(ctx.sample_index)) return oracle_.complete(m, ctx);
    return {"<think>unsure</think>\n<answer>no idea</answer>", 0.0, std::nullopt, 0};
  }
  nlohmann::json describe() const override { return {{"kind", "mixed"}}; }

 private:
  std::function<bool(int)> keep_;
  OraclePolicy oracle_;
};

inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("goalpose_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline constexpr const char* kFixtureGuidance = "Move over to the orange";

// move_near, seed 0, oracle replies, one guidance message before round 2.
inline Episode guided_fixture_episode() {
  OraclePolicy oracle;
  EpisodeOptions opts;
  opts.mode = EpisodeMode::kGuided;
  opts.guidance = [](const Episode&, int round) -> std::optional<std::string> {
    if (round == 2) return std::string(kFixtureGuidance);
    return std::nullopt;
  };
  return run_episode(TaskSpec::make(TaskName::kMoveNear), 0, oracle, opts);
}

}  // namespace goalpose::testing

#endif  // GOALPOSE_TESTS_FIXTURES_HPP_
