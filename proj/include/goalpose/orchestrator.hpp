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

#ifndef GOALPOSE_ORCHESTRATOR_HPP_
#define GOALPOSE_ORCHESTRATOR_HPP_

// The multi-round loop: observe -> prompt -> query -> parse -> execute ->
// evaluate, plus role reversion, batch evaluation and replay.

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "goalpose/episode.hpp"
#include "goalpose/error.hpp"
#include "goalpose/log.hpp"
#include "goalpose/policy.hpp"
#include "goalpose/protocol.hpp"
#include "goalpose/render.hpp"
#include "goalpose/world.hpp"

namespace goalpose {

struct EpisodeOptions {
  EpisodeMode mode = EpisodeMode::kAuto;
  int max_rounds = 12;
  int parse_abort_after = 2;  // consecutive unparseable replies
  Representation representation = Representation::kAxis;
  CameraSpec camera;
  PromptOptions prompt;
  int sample_index = 0;
  std::string id;  // empty: <task>_s<seed>
  // Guided mode: text the human adds to the round about to be queried.
  std::function<std::optional<std::string>(const Episode&, int round)> guidance;
};

inline nlohmann::json options_snapshot(const EpisodeOptions& o) {
  return {{"mode", mode_name(o.mode)},
          {"max_rounds", o.max_rounds},
          {"parse_abort_after", o.parse_abort_after},
          {"representation", representation_name(o.representation)},
          {"camera", o.camera},
          {"system_message", o.prompt.system_message},
          {"system_prompt", o.prompt.system_prompt},
          {"image_history", o.prompt.image_history},
          {"sample_index", o.sample_index}};
}

struct Observation {
  std::string scene_text;
  ImageRef image;
};

// Step-wise episode driver. run_episode loops it; the collection service
// interleaves human decisions between query() and commit().
class EpisodeRunner {
 public:
  EpisodeRunner(const TaskSpec& task, std::uint64_t seed, EpisodeOptions opts,
                const nlohmann::json& policy_snapshot = nlohmann::json::object())
      : opts_(std::move(opts)), world_(world_init(task, seed)) {
    if (opts_.max_rounds < 1) throw Error(Errc::kInvalidArgument, "max_rounds must be >= 1");
    ep_.id = opts_.id.empty() ? default_episode_id(task, seed) : opts_.id;
    ep_.task = task;
    ep_.seed = seed;
    ep_.mode = opts_.mode;
    ep_.representation = opts_.representation;
    ep_.created_at = utc_timestamp();
    ep_.config = {{"episode", options_snapshot(opts_)}, {"policy", policy_snapshot}};
    conv_.base_prompt = std::string(base_prompt_template(opts_.representation));
    conv_.task_text = std::string(task.instruction());
  }

  bool done() const { return done_; }
  const Episode& episode() const { return ep_; }
  Episode& episode() { return ep_; }
  const WorldState& world() const { return world_; }
  const EpisodeOptions& options() const { return opts_; }
  int next_round() const { return static_cast<int>(ep_.rounds.size()) + 1; }

  const Observation& observation() {
    if (!obs_) {
      Observation o;
      o.scene_text = serialize_scene(scene_snapshot(world_), {opts_.representation, 3});
      auto png = std::make_shared<const Bytes>(render(world_, opts_.camera).to_png());
      o.image = ImageRef{frame_path(ep_.id, next_round()), std::move(png)};
      obs_ = std::move(o);
    }
    return *obs_;
  }

  std::vector<Message> messages(const std::optional<std::string>& guidance) {
    const Observation& o = observation();
    return build_prompt(conv_, o.scene_text, o.image, guidance, opts_.prompt);
  }

  // A query ready to send: the round skeleton, the prompt and the context.
  // Building it touches runner state; sending it does not, so a caller may
  // release its lock around complete_query().
  struct PreparedQuery {
    Round round;
    std::vector<Message> messages;
    PolicyContext ctx;
    Representation representation = Representation::kAxis;
  };

  PreparedQuery prepare_query(const std::optional<std::string>& guidance) {
    if (done_) throw Error(Errc::kInvalidArgument, "episode already finished");
    PreparedQuery q;
    q.round.index = next_round();
    q.messages = messages(guidance);
    q.round.scene_text = obs_->scene_text;
    q.round.image = obs_->image;
    q.round.guidance = guidance;
    q.ctx = PolicyContext{&world_, q.round.index, opts_.sample_index, opts_.representation};
    q.representation = opts_.representation;
    return q;
  }

  // Policy errors propagate; a reply that does not parse is recorded in
  // parse_error.
  static Round complete_query(PreparedQuery q, Policy& policy) {
    Round r = std::move(q.round);
    const auto t0 = std::chrono::steady_clock::now();
    PolicyReply reply = policy.complete(q.messages, q.ctx);
    r.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.assistant_text = std::move(reply.text);
    try {
      r.parsed = parse_response(r.assistant_text, q.representation);
    } catch (const Error& e) {
      r.parse_error = note_of(e);
    }
    return r;
  }

  // The returned round is not part of the episode until commit().
  Round query(Policy& policy, const std::optional<std::string>& guidance) {
    return complete_query(prepare_query(guidance), policy);
  }

  // Executes the round's goal (if it parsed), records it and updates the
  // outcome.
  const Round& commit(Round r) {
    if (done_) throw Error(Errc::kInvalidArgument, "episode already finished");
    r.index = next_round();
    if (r.parsed) {
      consecutive_parse_failures_ = 0;
      try {
        r.step = apply_goal(world_, r.parsed->goal);
      } catch (const Error& e) {
        r.step_error = note_of(e);
      }
    } else {
      ++consecutive_parse_failures_;
    }
    r.success_after = evaluate_success(world_);
    r.world_hash = world_hash(world_);
    conv_.turns.push_back({r.scene_text, r.image, r.guidance, r.assistant_text});
    ep_.rounds.push_back(std::move(r));
    obs_.reset();
    const Round& last = ep_.rounds.back();
    if (last.success_after) {
      finish(Outcome::kSuccess);
    } else if (consecutive_parse_failures_ >= opts_.parse_abort_after) {
      finish(Outcome::kParseAbort);
    } else if (static_cast<int>(ep_.rounds.size()) >= opts_.max_rounds) {
      finish(Outcome::kMaxRounds);
    }
    return last;
  }

  // A policy failure ends the episode.
  void fail(const ErrorNote& note) {
    ep_.error = note;
    finish(Outcome::kFailure);
  }

 private:
  void finish(Outcome o) {
    ep_.outcome = o;
    done_ = true;
  }

  EpisodeOptions opts_;
  WorldState world_;
  Episode ep_;
  ConversationState conv_;
  std::optional<Observation> obs_;
  int consecutive_parse_failures_ = 0;
  bool done_ = false;
};

inline Episode run_episode(const TaskSpec& task, std::uint64_t seed, Policy& policy,
                           const EpisodeOptions& opts = {}) {
  EpisodeRunner runner(task, seed, opts, policy.describe());
  while (!runner.done()) {
    std::optional<std::string> guidance;
    if (opts.mode == EpisodeMode::kGuided && opts.guidance) {
      guidance = opts.guidance(runner.episode(), runner.next_round());
    }
    Round r;
    try {
      r = runner.query(policy, guidance);
    } catch (const Error& e) {
      log::warning("{} round {}: {}", runner.episode().id, runner.next_round(), e.what());
      runner.fail(note_of(e));
      break;
    } catch (const std::exception& e) {
      runner.fail({"Internal", e.what()});
      break;
    }
    runner.commit(std::move(r));
  }
  return runner.episode();
}

// ---------------------------------------------------------------------------
// Role reversion

struct TrainingConversation {
  std::string id;
  TaskSpec task;
  std::uint64_t seed = 0;
  std::string source_episode;
  Representation representation = Representation::kAxis;
  std::vector<Message> messages;
  std::string root;  // where relative image paths resolve
};

// Moves each round's guidance out of the user turn and in front of the
// assistant reply that followed it, separated by a blank line.
inline TrainingConversation revert_roles(const Episode& e, const PromptOptions& opts = {}) {
  if (e.outcome != Outcome::kSuccess) {
    throw Error(Errc::kNotSuccessful,
                fmt::format("episode {} ended with {}", e.id, outcome_name(e.outcome)));
  }
  ConversationState conv = conversation_of(e);
  for (Turn& t : conv.turns) {
    if (t.guidance && !t.guidance->empty()) {
      t.assistant_text = *t.guidance + "\n\n" + t.assistant_text;
    }
    t.guidance.reset();
  }
  TrainingConversation tc;
  tc.id = e.id;
  tc.task = e.task;
  tc.seed = e.seed;
  tc.source_episode = e.id;
  tc.representation = e.representation;
  tc.messages = conversation_messages(conv, opts);
  tc.root = e.root;
  return tc;
}

// ---------------------------------------------------------------------------
// Batches

struct EpisodeJob {
  TaskSpec task;
  std::uint64_t seed = 0;
  int sample_index = 0;
  std::string id;
};

struct BatchResult {
  std::vector<Episode> episodes;
  std::vector<double> wall_times;  // s
};

// Runs fn(i) for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers))));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (threads == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

inline BatchResult run_jobs(const std::vector<EpisodeJob>& jobs, Policy& policy,
                            const EpisodeOptions& opts, int parallelism) {
  BatchResult out;
  out.episodes.resize(jobs.size());
  out.wall_times.resize(jobs.size());
  parallel_for(jobs.size(), parallelism, [&](std::size_t i) {
    EpisodeOptions o = opts;
    o.sample_index = jobs[i].sample_index;
    o.id = jobs[i].id;
    const auto t0 = std::chrono::steady_clock::now();
    out.episodes[i] = run_episode(jobs[i].task, jobs[i].seed, policy, o);
    out.wall_times[i] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return out;
}

struct SeedResult {
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kFailure;
  int rounds = 0;
  double wall_time = 0.0;
};

struct SuccessReport {
  TaskSpec task;
  std::vector<SeedResult> per_seed;
  double success_rate = 0.0;
  double mean_rounds = 0.0;
  double mean_wall_time = 0.0;
};

inline SuccessReport summarize(const TaskSpec& task, const BatchResult& batch) {
  SuccessReport r;
  r.task = task;
  int ok = 0;
  for (std::size_t i = 0; i < batch.episodes.size(); ++i) {
    const Episode& e = batch.episodes[i];
    r.per_seed.push_back({e.seed, e.outcome, static_cast<int>(e.rounds.size()),
                          batch.wall_times[i]});
    ok += e.outcome == Outcome::kSuccess;
    r.mean_rounds += static_cast<double>(e.rounds.size());
    r.mean_wall_time += batch.wall_times[i];
  }
  if (!batch.episodes.empty()) {
    const double n = static_cast<double>(batch.episodes.size());
    r.success_rate = ok / n;
    r.mean_rounds /= n;
    r.mean_wall_time /= n;
  }
  return r;
}

inline BatchResult run_batch(const TaskSpec& task, const std::vector<std::uint64_t>& seeds,
                             Policy& policy, const EpisodeOptions& opts = {},
                             int parallelism = 1) {
  if (seeds.empty()) throw Error(Errc::kInvalidArgument, "no seeds");
  std::vector<EpisodeJob> jobs;
  for (std::uint64_t s : seeds) jobs.push_back({task, s, 0, default_episode_id(task, s)});
  return run_jobs(jobs, policy, opts, parallelism);
}

inline SuccessReport evaluate_batch(const TaskSpec& task, const std::vector<std::uint64_t>& seeds,
                                    Policy& policy, const EpisodeOptions& opts = {},
                                    int parallelism = 1) {
  return summarize(task, run_batch(task, seeds, policy, opts, parallelism));
}

inline void to_json(nlohmann::json& j, const SuccessReport& r) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.per_seed) {
    seeds.push_back({{"seed", s.seed},
                     {"outcome", outcome_name(s.outcome)},
                     {"rounds", s.rounds},
                     {"wall_time", s.wall_time}});
  }
  j = {{"task", r.task.id()},
       {"trials", r.per_seed.size()},
       {"success_rate", r.success_rate},
       {"mean_rounds", r.mean_rounds},
       {"mean_wall_time", r.mean_wall_time},
       {"per_seed", seeds}};
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayReport {
  bool ok = true;
  bool final_success = false;
  std::vector<std::string> mismatches;
};

// Re-executes the stored goals on a fresh world and compares every recorded
// StepOutcome, success flag, world digest and the final outcome bit for bit.
inline ReplayReport replay_episode(const Episode& e) {
  ReplayReport rep;
  WorldState w = world_init(e.task, e.seed);
  auto mismatch = [&](std::string m) {
    rep.ok = false;
    rep.mismatches.push_back(std::move(m));
  };
  for (const Round& r : e.rounds) {
    if (r.parsed) {
      std::optional<StepOutcome> step;
      std::optional<std::string> err;
      try {
        step = apply_goal(w, r.parsed->goal);
      } catch (const Error& ex) {
        err = std::string(errc_name(ex.code()));
      }
      if (r.step.has_value() != step.has_value() ||
          (step && !(*step == *r.step))) {
        mismatch(fmt::format("round {}: step outcome differs", r.index));
      }
      const std::optional<std::string> recorded_err =
          r.step_error ? std::optional<std::string>(r.step_error->code) : std::nullopt;
      if (err != recorded_err) mismatch(fmt::format("round {}: step error differs", r.index));
    }
    if (evaluate_success(w) != r.success_after) {
      mismatch(fmt::format("round {}: success flag differs", r.index));
    }
    if (world_hash(w) != r.world_hash) {
      mismatch(fmt::format("round {}: world state differs", r.index));
    }
  }
  rep.final_success = evaluate_success(w);
  if (rep.final_success != (e.outcome == Outcome::kSuccess)) {
    mismatch("final success differs from recorded outcome");
  }
  return rep;
}

}  // namespace goalpose

#endif  // GOALPOSE_ORCHESTRATOR_HPP_
