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

#ifndef GOALPOSE_RL_HPP_
#define GOALPOSE_RL_HPP_

// GRPO plumbing: same-seed rollout groups, binary rewards, group-relative
// advantages, the clipped objective evaluated from externally supplied token
// log-probabilities, and rollout export for an outside trainer. No gradient
// step happens here.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/episode.hpp"
#include "goalpose/orchestrator.hpp"
#include "goalpose/policy.hpp"
#include "goalpose/records.hpp"

namespace goalpose {

inline constexpr double kDefaultClipEpsilon = 0.2;
inline constexpr const char* kRolloutDataFile = "rollouts.jsonl";

// Population mean and std; a group whose rewards are all equal gets zero
// advantages instead of 0/0.
inline std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw Error(Errc::kInvalidArgument, fmt::format("group of {} rewards, need at least 2", rewards.size()));
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

struct RolloutGroup {
  std::string id;  // "<task>_s<seed>"
  TaskSpec task;
  std::uint64_t seed = 0;
  std::vector<Episode> episodes;  // K of them, same initial world
  std::vector<double> rewards;    // 1 iff success
  std::vector<double> advantages;

  int k() const { return static_cast<int>(episodes.size()); }
};

inline std::string group_id(const TaskSpec& task, std::uint64_t seed) {
  return default_episode_id(task, seed);
}

inline std::string rollout_episode_id(const TaskSpec& task, std::uint64_t seed, int k) {
  return fmt::format("{}_k{}", default_episode_id(task, seed), k);
}

// Fills rewards and advantages from the episodes' outcomes.
inline void score_group(RolloutGroup& g) {
  g.rewards.clear();
  for (const Episode& e : g.episodes) g.rewards.push_back(e.outcome == Outcome::kSuccess ? 1.0 : 0.0);
  g.advantages = group_advantages(g.rewards);
}

// K episodes from world_init(task, seed); sample k is told its index through
// PolicyContext so a sampling policy can diverge. Policy errors end that
// episode as a failure (reward 0), they do not abort the group.
inline RolloutGroup collect_group(const TaskSpec& task, std::uint64_t seed, int k, Policy& policy,
                                  const EpisodeOptions& opts = {}, int parallelism = 1) {
  if (k < 2) throw Error(Errc::kInvalidArgument, fmt::format("K = {}, need K >= 2", k));
  std::vector<EpisodeJob> jobs;
  for (int i = 0; i < k; ++i) jobs.push_back({task, seed, i, rollout_episode_id(task, seed, i)});
  RolloutGroup g;
  g.id = group_id(task, seed);
  g.task = task;
  g.seed = seed;
  g.episodes = run_jobs(jobs, policy, opts, parallelism).episodes;
  score_group(g);
  return g;
}

// ---------------------------------------------------------------------------
// Token log-probabilities

struct RoundLogProbs {
  int round = 1;
  std::vector<std::string> tokens;  // provider tokenization, echoed for audit
  std::vector<double> current;      // log pi_theta
  std::vector<double> old;          // log pi_old
};

struct SampleLogProbs {
  std::string episode_id;
  std::vector<RoundLogProbs> rounds;
};

struct TokenLogProbs {
  std::string group_id;
  std::vector<SampleLogProbs> samples;
};

inline void to_json(nlohmann::json& j, const TokenLogProbs& lp) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : lp.samples) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : s.rounds) {
      rounds.push_back({{"round", r.round}, {"tokens", r.tokens}, {"current", r.current}, {"old", r.old}});
    }
    samples.push_back({{"episode_id", s.episode_id}, {"rounds", rounds}});
  }
  j = {{"schema", kLogProbsSchemaId}, {"group_id", lp.group_id}, {"samples", samples}};
}

inline void from_json(const nlohmann::json& j, TokenLogProbs& lp) {
  schema_by_id(kLogProbsSchemaId).require(j, "logprobs");
  lp.group_id = j.at("group_id");
  lp.samples.clear();
  for (const auto& s : j.at("samples")) {
    SampleLogProbs sp{s.at("episode_id"), {}};
    for (const auto& r : s.at("rounds")) {
      sp.rounds.push_back({r.at("round"), r.at("tokens"), r.at("current"), r.at("old")});
    }
    lp.samples.push_back(std::move(sp));
  }
}

// Splits text into pieces that each carry their leading whitespace, so the
// pieces concatenate back to the text. Stand-in tokenizer for tests and for
// producing log-prob templates.
inline std::vector<std::string> whitespace_pieces(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && space(text[j])) ++j;
    while (j < text.size() && !space(text[j])) ++j;
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// Log-prob file shaped like the group with every value set to `logp` under
// both policies, tokenized by whitespace_pieces. A trainer overwrites the
// numbers (and may retokenize).
inline TokenLogProbs logprob_template(const RolloutGroup& g, double logp = 0.0) {
  TokenLogProbs lp{g.id, {}};
  for (const Episode& e : g.episodes) {
    SampleLogProbs s{e.id, {}};
    for (const Round& r : e.rounds) {
      auto toks = whitespace_pieces(r.assistant_text);
      if (toks.empty()) toks.emplace_back("");
      const std::size_t n = toks.size();
      s.rounds.push_back({r.index, std::move(toks), std::vector<double>(n, logp),
                          std::vector<double>(n, logp)});
    }
    lp.samples.push_back(std::move(s));
  }
  return lp;
}

namespace rl_detail {

[[noreturn]] inline void misaligned(const std::string& what) {
  throw Error(Errc::kMisalignedLogProbs, what);
}

inline std::string joined(const std::vector<std::string>& toks) {
  std::string s;
  for (const auto& t : toks) s += t;
  return s;
}

}  // namespace rl_detail

// Clipped surrogate: for every token, min(ratio * A_k, clip(ratio, 1-eps,
// 1+eps) * A_k) with ratio = exp(current - old); averaged over the tokens of
// a round, then over the rounds of a sample, then over the K samples.
// Samples are matched to episodes by id, so group order does not matter.
// epsilon may be +infinity (no clipping).
inline double grpo_objective(const RolloutGroup& g, const TokenLogProbs& lp,
                             double epsilon = kDefaultClipEpsilon) {
  using rl_detail::misaligned;
  if (!(epsilon >= 0.0)) throw Error(Errc::kInvalidArgument, "epsilon must be >= 0");
  const std::size_t k = g.episodes.size();
  if (k == 0 || g.advantages.size() != k) misaligned("group has no advantages for its episodes");
  if (lp.samples.size() != k) {
    misaligned(fmt::format("{} log-prob samples for {} episodes", lp.samples.size(), k));
  }
  std::map<std::string, const SampleLogProbs*> by_id;
  for (const auto& s : lp.samples) {
    if (!by_id.emplace(s.episode_id, &s).second) misaligned("duplicate sample " + s.episode_id);
  }
  const double lo = 1.0 - epsilon;
  const double hi = 1.0 + epsilon;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const Episode& e = g.episodes[i];
    const double a = g.advantages[i];
    auto it = by_id.find(e.id);
    if (it == by_id.end()) misaligned("no log-probs for episode " + e.id);
    const SampleLogProbs& s = *it->second;
    if (s.rounds.size() != e.rounds.size()) {
      misaligned(fmt::format("{}: {} log-prob rounds for {} rounds", e.id, s.rounds.size(),
                             e.rounds.size()));
    }
    if (e.rounds.empty()) misaligned(e.id + ": episode has no rounds");
    double sample = 0.0;
    for (std::size_t t = 0; t < e.rounds.size(); ++t) {
      const RoundLogProbs& r = s.rounds[t];
      const std::size_t n = r.current.size();
      if (r.round != e.rounds[t].index) {
        misaligned(fmt::format("{}: round {} where {} expected", e.id, r.round, e.rounds[t].index));
      }
      if (n == 0 || r.old.size() != n || r.tokens.size() != n) {
        misaligned(fmt::format("{} round {}: {} tokens, {} current, {} old", e.id, r.round,
                               r.tokens.size(), n, r.old.size()));
      }
      if (rl_detail::joined(r.tokens) != e.rounds[t].assistant_text) {
        misaligned(fmt::format("{} round {}: tokens do not spell the stored reply", e.id, r.round));
      }
      double round_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double ratio = std::exp(r.current[j] - r.old[j]);
        const double clipped = std::clamp(ratio, lo, hi);
        round_sum += std::min(ratio * a, clipped * a);
      }
      sample += round_sum / static_cast<double>(n);
    }
    total += sample / static_cast<double>(e.rounds.size());
  }
  return total / static_cast<double>(k);
}

// ---------------------------------------------------------------------------
// Rollout export

struct RolloutRecord {
  std::string id;
  std::string group_id;
  TaskSpec task;
  std::uint64_t seed = 0;
  int sample_index = 0;
  Representation representation = Representation::kAxis;
  Outcome outcome = Outcome::kFailure;
  int reward = 0;
  double advantage = 0.0;
  std::vector<Message> messages;
  std::string root;
};

inline std::vector<RolloutRecord> rollout_records(const RolloutGroup& g, const PromptOptions& prompt = {}) {
  if (g.rewards.size() != g.episodes.size() || g.advantages.size() != g.episodes.size()) {
    throw Error(Errc::kInvalidArgument, g.id + ": group is not scored");
  }
  std::vector<RolloutRecord> out;
  for (std::size_t i = 0; i < g.episodes.size(); ++i) {
    const Episode& e = g.episodes[i];
    RolloutRecord r;
    r.id = e.id;
    r.group_id = g.id;
    r.task = g.task;
    r.seed = g.seed;
    r.sample_index = static_cast<int>(i);
    r.representation = e.representation;
    r.outcome = e.outcome;
    r.reward = static_cast<int>(g.rewards[i]);
    r.advantage = g.advantages[i];
    r.messages = conversation_messages(conversation_of(e), prompt);
    r.root = e.root;
    out.push_back(std::move(r));
  }
  return out;
}

inline Manifest export_rollout_records(const std::vector<RolloutRecord>& records,
                                       const std::string& dir, const ExportOptions& opts = {}) {
  if (records.empty()) throw Error(Errc::kInvalidArgument, "nothing to export");
  Manifest m;
  m.kind = "rollouts";
  m.data = kRolloutDataFile;
  m.inline_images = opts.inline_images;
  std::set<std::string> ids, groups;
  std::vector<nlohmann::json> lines;
  RecordImages images;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw Error(Errc::kInvalidArgument, "duplicate rollout id " + r.id);
    groups.insert(r.group_id);
    check_conversation(r.messages, r.representation, false);
    lines.push_back({{"schema", kRolloutSchemaId},
                     {"id", r.id},
                     {"group_id", r.group_id},
                     {"task", r.task.id()},
                     {"task_params", r.task.params},
                     {"seed", r.seed},
                     {"sample_index", r.sample_index},
                     {"representation", representation_name(r.representation)},
                     {"outcome", outcome_name(r.outcome)},
                     {"reward", r.reward},
                     {"advantage", r.advantage},
                     {"messages", messages_to_json(r.messages, r.id, r.root, opts, images)}});
    ++m.per_task[std::string(r.task.id())];
  }
  m.groups = static_cast<int>(groups.size());
  return write_export(dir, std::move(m), lines, std::move(images));
}

inline Manifest export_rollouts(const std::vector<RolloutGroup>& groups, const std::string& dir,
                                const ExportOptions& opts = {}, const PromptOptions& prompt = {}) {
  if (groups.empty()) throw Error(Errc::kInvalidArgument, "no groups to export");
  std::vector<RolloutRecord> all;
  for (const auto& g : groups) {
    auto recs = rollout_records(g, prompt);
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return export_rollout_records(all, dir, opts);
}

inline std::vector<RolloutRecord> load_rollouts(const std::string& path) {
  namespace fs = std::filesystem;
  std::string file = path;
  if (fs::is_directory(path)) {
    file = fs::exists(fs::path(path) / kManifestFile)
               ? (fs::path(path) / load_manifest(path).data).string()
               : (fs::path(path) / kRolloutDataFile).string();
  }
  const std::string root = fs::path(file).parent_path().string();
  std::vector<RolloutRecord> out;
  for (const auto& j : read_jsonl(file, kRolloutSchemaId)) {
    RolloutRecord r;
    r.id = j["id"];
    r.group_id = j["group_id"];
    r.task = TaskSpec::from_string(j["task"].get<std::string>());
    j["task_params"].get_to(r.task.params);
    r.seed = j["seed"];
    r.sample_index = j["sample_index"];
    r.representation = representation_from_string(j["representation"].get<std::string>());
    r.outcome = outcome_from_string(j["outcome"].get<std::string>());
    r.reward = j["reward"];
    r.advantage = j["advantage"];
    r.messages = messages_from_json(j["messages"]);
    r.root = root;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace goalpose

#endif  // GOALPOSE_RL_HPP_
