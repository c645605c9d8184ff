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

#ifndef GOALPOSE_CLI_HPP_
#define GOALPOSE_CLI_HPP_

// Command-line front end: run, eval, serve, rollout, objective, export-sft,
// validate, replay, stats. Settings resolve as defaults < --config file <
// flags, and the resolved RunConfig is printed and stored with every
// artifact so a run can be repeated from its snapshot.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/collect_api.hpp"
#include "goalpose/dataset.hpp"
#include "goalpose/episode.hpp"
#include "goalpose/log.hpp"
#include "goalpose/oracle.hpp"
#include "goalpose/orchestrator.hpp"
#include "goalpose/records.hpp"
#include "goalpose/rl.hpp"
#include "goalpose/version.hpp"

#include <CLI11.hpp>  // after the library headers, like httplib

namespace goalpose::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,  // bad flags or configuration, nothing was written
  kExitIo = 3,
  kExitValidation = 4,
  kExitReplayMismatch = 5,
  kExitPolicy = 6,  // the policy endpoint failed
};

inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::kInvalidArgument:
    case Errc::kInvalidTask:
      return kExitUsage;
    case Errc::kIo:
      return kExitIo;
    case Errc::kSchemaViolation:
    case Errc::kMisalignedLogProbs:
    case Errc::kNotSuccessful:
      return kExitValidation;
    case Errc::kTimeout:
    case Errc::kTransportError:
    case Errc::kRemoteRefusal:
    case Errc::kEmptyCompletion:
      return kExitPolicy;
    default:
      return kExitInternal;
  }
}

inline bool is_policy_error(const std::string& code) {
  const auto c = errc_from_name(code);
  return c && exit_code_for(*c) == kExitPolicy;
}

// "3", "0..49", "1,4,9", "0..4,10"
inline std::vector<std::uint64_t> parse_seeds(std::string_view spec) {
  std::vector<std::uint64_t> out;
  auto bad = [&] { return Error(Errc::kInvalidArgument, fmt::format("bad seed list '{}'", spec)); };
  auto number = [&](std::string_view s) {
    s = detail::trim(s);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos) throw bad();
    return std::stoull(std::string(s));
  };
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    const std::string_view part = spec.substr(pos, comma - pos);
    const auto dots = part.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(number(part));
    } else {
      const auto lo = number(part.substr(0, dots));
      const auto hi = number(part.substr(dots + 2));
      if (hi < lo || hi - lo > 1000000) throw bad();
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw bad();
  return out;
}

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "sessions";
  bool auto_approve = false;
  std::string cors_origin = "*";
};

struct RunConfig {
  std::string task = "lift_can";  // or "all" for eval
  std::vector<std::uint64_t> seeds = {0};
  EpisodeMode mode = EpisodeMode::kAuto;
  Representation representation = Representation::kAxis;
  int max_rounds = 12;
  int parse_abort_after = 2;
  int image_history = -1;
  PolicyConfig policy;
  int parallel = 1;
  std::string out = "runs";
  int k = 4;
  double epsilon = kDefaultClipEpsilon;
  std::map<int, std::string> guidance;  // round -> text, guided runs
  ServeConfig serve;
};

inline nlohmann::json to_snapshot(const RunConfig& c) {
  nlohmann::json guidance = nlohmann::json::object();
  for (const auto& [r, t] : c.guidance) guidance[std::to_string(r)] = t;
  return {{"task", c.task},
          {"seeds", c.seeds},
          {"mode", mode_name(c.mode)},
          {"representation", representation_name(c.representation)},
          {"max_rounds", c.max_rounds},
          {"parse_abort_after", c.parse_abort_after},
          {"image_history", c.image_history},
          {"policy", c.policy},
          {"parallel", c.parallel},
          {"out", c.out},
          {"k", c.k},
          {"epsilon", c.epsilon},
          {"guidance", guidance},
          {"serve",
           {{"host", c.serve.host},
            {"port", c.serve.port},
            {"data_dir", c.serve.data_dir},
            {"auto_approve", c.serve.auto_approve},
            {"cors_origin", c.serve.cors_origin}}}};
}

// Overlays the keys present in `j` onto `c`. Unknown keys are errors so a
// typo in a config file does not silently fall back to a default.
inline void merge_config(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "task") c.task = v.get<std::string>();
      else if (key == "seeds") c.seeds = v.is_string() ? parse_seeds(v.get<std::string>())
                                                        : v.get<std::vector<std::uint64_t>>();
      else if (key == "mode") c.mode = mode_from_string(v.get<std::string>());
      else if (key == "representation") c.representation = representation_from_string(v.get<std::string>());
      else if (key == "max_rounds") c.max_rounds = v.get<int>();
      else if (key == "parse_abort_after") c.parse_abort_after = v.get<int>();
      else if (key == "image_history") c.image_history = v.get<int>();
      else if (key == "policy") {
        nlohmann::json merged = c.policy;
        merged.update(v);
        c.policy = merged.get<PolicyConfig>();
      }
      else if (key == "parallel") c.parallel = v.get<int>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "k") c.k = v.get<int>();
      else if (key == "epsilon") c.epsilon = v.get<double>();
      else if (key == "guidance") {
        c.guidance.clear();
        for (const auto& [r, t] : v.items()) c.guidance[std::stoi(r)] = t.get<std::string>();
      }
      else if (key == "serve") {
        for (const auto& [sk, sv] : v.items()) {
          if (sk == "host") c.serve.host = sv.get<std::string>();
          else if (sk == "port") c.serve.port = sv.get<int>();
          else if (sk == "data_dir") c.serve.data_dir = sv.get<std::string>();
          else if (sk == "auto_approve") c.serve.auto_approve = sv.get<bool>();
          else if (sk == "cors_origin") c.serve.cors_origin = sv.get<std::string>();
          else throw Error(Errc::kInvalidArgument, "unknown config key serve." + sk);
        }
      }
      else throw Error(Errc::kInvalidArgument, "unknown config key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("config: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(Errc::kInvalidArgument, "config: guidance keys must be round numbers");
  }
}

inline std::vector<TaskSpec> resolve_tasks(const std::string& task) {
  if (task == "all") {
    std::vector<TaskSpec> all;
    for (TaskName t : kAllTasks) all.push_back(TaskSpec::make(t));
    return all;
  }
  return {TaskSpec::from_string(task)};
}

// Checks everything that can be checked before touching the filesystem or
// the network.
inline void validate_config(const RunConfig& c, bool allow_all_tasks) {
  if (c.task == "all" && !allow_all_tasks) {
    throw Error(Errc::kInvalidArgument, "--task all is only valid for eval");
  }
  resolve_tasks(c.task);
  if (c.seeds.empty()) throw Error(Errc::kInvalidArgument, "no seeds");
  if (c.max_rounds < 1) throw Error(Errc::kInvalidArgument, "max_rounds must be >= 1");
  if (c.parse_abort_after < 1) throw Error(Errc::kInvalidArgument, "parse_abort_after must be >= 1");
  if (c.parallel < 1) throw Error(Errc::kInvalidArgument, "parallel must be >= 1");
  if (c.k < 2) throw Error(Errc::kInvalidArgument, "k must be >= 2");
  if (!(c.epsilon >= 0.0)) throw Error(Errc::kInvalidArgument, "epsilon must be >= 0");
  c.policy.validate();
  if (c.policy.kind == PolicyKind::kRemote && std::getenv(c.policy.api_key_env.c_str()) == nullptr) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("environment variable {} (api_key_env) is not set", c.policy.api_key_env));
  }
}

inline EpisodeOptions episode_options(const RunConfig& c) {
  EpisodeOptions o;
  o.mode = c.mode;
  o.max_rounds = c.max_rounds;
  o.parse_abort_after = c.parse_abort_after;
  o.representation = c.representation;
  o.prompt.image_history = c.image_history;
  if (c.mode == EpisodeMode::kGuided) {
    const auto g = c.guidance;
    o.guidance = [g](const Episode&, int round) -> std::optional<std::string> {
      auto it = g.find(round);
      if (it == g.end()) return std::nullopt;
      return it->second;
    };
  }
  return o;
}

// Attaches the run snapshot to an episode's stored config.
inline void stamp(Episode& e, const RunConfig& c) { e.config["run"] = to_snapshot(c); }

// Loads every goalpose episode file under the given files or directories,
// in sorted path order.
inline std::vector<Episode> load_episodes(const std::vector<std::string>& inputs) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
      }
    } else if (fs::is_regular_file(in)) {
      files.emplace_back(in);
    } else {
      throw Error(Errc::kIo, "no such file or directory: " + in);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Episode> out;
  for (const auto& f : files) {
    nlohmann::json head;
    try {
      head = nlohmann::json::parse(read_file(f.string()));
    } catch (const nlohmann::json::parse_error&) {
      log::debug("skipping {}: not JSON", f.string());
      continue;
    }
    if (!head.is_object() || head.value("schema", "") != kEpisodeSchema) {
      log::debug("skipping {}: not an episode", f.string());
      continue;
    }
    out.push_back(load_episode(f.string()));
  }
  return out;
}

// Rebuilds scored groups from exported rollout records, enough for
// grpo_objective: episode ids, assistant texts, rewards, advantages.
inline std::vector<RolloutGroup> groups_from_records(const std::vector<RolloutRecord>& records) {
  std::map<std::string, RolloutGroup> by_id;
  std::vector<std::string> order;
  for (const auto& r : records) {
    auto [it, fresh] = by_id.try_emplace(r.group_id);
    RolloutGroup& g = it->second;
    if (fresh) {
      order.push_back(r.group_id);
      g.id = r.group_id;
      g.task = r.task;
      g.seed = r.seed;
    }
    Episode e;
    e.id = r.id;
    e.task = r.task;
    e.seed = r.seed;
    e.outcome = r.outcome;
    int round = 0;
    for (const Message& m : r.messages) {
      if (m.role != Role::kAssistant) continue;
      Round rd;
      rd.index = ++round;
      rd.assistant_text = m.text;
      e.rounds.push_back(std::move(rd));
    }
    g.episodes.push_back(std::move(e));
    g.rewards.push_back(r.reward);
    g.advantages.push_back(r.advantage);
  }
  std::vector<RolloutGroup> out;
  for (const auto& id : order) out.push_back(std::move(by_id[id]));
  return out;
}

struct FrameCheck {
  int compared = 0;
  std::vector<std::string> mismatches;
};

// Re-renders the observation of every round and compares it with the stored
// frame; optionally writes the re-rendered frames to `dump_dir`.
inline FrameCheck check_frames(const Episode& e, const std::string& dump_dir) {
  namespace fs = std::filesystem;
  FrameCheck fc;
  CameraSpec cam;
  if (e.config.contains("episode") && e.config["episode"].contains("camera")) {
    cam = e.config["episode"]["camera"].get<CameraSpec>();
  }
  WorldState w = world_init(e.task, e.seed);
  if (!dump_dir.empty()) fs::create_directories(dump_dir);
  for (const Round& r : e.rounds) {
    const Bytes png = render(w, cam).to_png();
    if (!dump_dir.empty()) {
      write_file((fs::path(dump_dir) / fmt::format("round_{:02d}.png", r.index)).string(), png);
    }
    const bool on_disk = !r.image.path.empty() &&
                         fs::is_regular_file(fs::path(e.root) / r.image.path);
    if (r.image.png || on_disk) {
      ++fc.compared;
      if (image_bytes(r.image, e.root) != png) {
        fc.mismatches.push_back(fmt::format("round {}: rendered frame differs", r.index));
      }
    }
    if (r.parsed) {
      try {
        apply_goal(w, r.parsed->goal);
      } catch (const Error&) {
      }
    }
  }
  return fc;
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) { build(); }

  CLI::App& app() { return app_; }

  int run(int argc, const char* const* argv) {
    try {
      app_.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      out_ << app_.help(app_.get_subcommands().empty() ? "" : app_.get_subcommands().back()->get_name());
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app_.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::Success&) {
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitUsage;
    }
    if (!log_level_.empty()) log::set_threshold(log::level_from_string(log_level_, log::Level::kWarning));
    try {
      return dispatch_();
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitIo;
    } catch (const std::exception& e) {
      err_ << "internal error: " << e.what() << "\n";
      return kExitInternal;
    }
  }

  int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"goalpose"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
  }

 private:
  // Flags shared by the subcommands that resolve a RunConfig. Each keeps its
  // CLI11 option so "was it given" decides precedence over the config file.
  struct Flags {
    std::string config;
    std::string task;
    std::uint64_t seed = 0;
    std::string seeds;
    std::string representation;
    std::string policy;
    std::string endpoint, model, api_key_env;
    double temperature = 0, timeout = 0;
    int max_retries = 0, max_rounds = 0, parse_abort_after = 0, image_history = 0;
    int parallel = 0, k = 0;
    double epsilon = 0;
    std::string out;
    bool guided = false;
    std::string guidance_file;
    std::string host, data_dir, cors_origin;
    int port = 0;
    bool auto_approve = false;
    std::map<std::string, CLI::Option*> given;

    bool has(const std::string& name) const {
      auto it = given.find(name);
      return it != given.end() && it->second->count() > 0;
    }
  };

  template <typename T>
  void flag(CLI::App* sub, Flags& f, const std::string& name, T& target, const std::string& help) {
    f.given[name] = sub->add_option("--" + name, target, help);
  }

  void common(CLI::App* sub, Flags& f, bool tasks, bool seeds, bool policy, bool loop) {
    f.given["config"] = sub->add_option("--config", f.config,
                                        "JSON config file; flags given on the command line win over it");
    if (tasks) flag(sub, f, "task", f.task, "task id (lift_can, move_near, stack_cube, put_carrot_on_plate, "
                                            "put_spoon_on_towel, drawer_open, drawer_close)");
    if (seeds) {
      flag(sub, f, "seed", f.seed, "single seed");
      flag(sub, f, "seeds", f.seeds, "seed list such as 0..49 or 1,4,9 (overrides --seed)");
    }
    if (loop) {
      flag(sub, f, "representation", f.representation, "rotation encoding in prompts and actions: axis or euler");
      flag(sub, f, "max-rounds", f.max_rounds, "round budget per episode");
      flag(sub, f, "parse-abort-after", f.parse_abort_after,
           "consecutive unparseable replies that end an episode");
      flag(sub, f, "image-history", f.image_history,
           "keep images of the most recent N rounds in the prompt (-1 keeps all)");
    }
    if (policy) {
      flag(sub, f, "policy", f.policy, "oracle or remote");
      flag(sub, f, "endpoint", f.endpoint, "chat-completions base URL for the remote policy");
      flag(sub, f, "model", f.model, "model name sent to the endpoint");
      flag(sub, f, "api-key-env", f.api_key_env, "name of the environment variable holding the API key");
      flag(sub, f, "temperature", f.temperature, "sampling temperature");
      flag(sub, f, "timeout", f.timeout, "seconds per request attempt");
      flag(sub, f, "max-retries", f.max_retries, "retries after a failed request");
    }
  }

  RunConfig resolve(const Flags& f) {
    RunConfig c;
    if (f.has("config")) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(f.config));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::kInvalidArgument, f.config + ": " + e.what());
      } catch (const Error& e) {
        throw Error(Errc::kInvalidArgument, e.detail());
      }
      merge_config(c, j);
    }
    if (f.has("task")) c.task = f.task;
    if (f.has("seed")) c.seeds = {f.seed};
    if (f.has("seeds")) c.seeds = parse_seeds(f.seeds);
    if (f.has("representation")) c.representation = representation_from_string(f.representation);
    if (f.has("max-rounds")) c.max_rounds = f.max_rounds;
    if (f.has("parse-abort-after")) c.parse_abort_after = f.parse_abort_after;
    if (f.has("image-history")) c.image_history = f.image_history;
    if (f.has("policy")) c.policy.kind = policy_kind_from_string(f.policy);
    if (f.has("endpoint")) c.policy.endpoint = f.endpoint;
    if (f.has("model")) c.policy.model = f.model;
    if (f.has("api-key-env")) c.policy.api_key_env = f.api_key_env;
    if (f.has("temperature")) c.policy.temperature = f.temperature;
    if (f.has("timeout")) c.policy.timeout = f.timeout;
    if (f.has("max-retries")) c.policy.max_retries = f.max_retries;
    if (f.has("parallel")) c.parallel = f.parallel;
    if (f.has("out")) c.out = f.out;
    if (f.has("k")) c.k = f.k;
    if (f.has("epsilon")) c.epsilon = f.epsilon;
    if (f.guided) c.mode = EpisodeMode::kGuided;
    if (f.has("guidance")) {
      merge_config(c, {{"guidance", nlohmann::json::parse(read_file(f.guidance_file))}});
      c.mode = EpisodeMode::kGuided;
    }
    if (f.has("host")) c.serve.host = f.host;
    if (f.has("port")) c.serve.port = f.port;
    if (f.has("data-dir")) c.serve.data_dir = f.data_dir;
    if (f.has("cors-origin")) c.serve.cors_origin = f.cors_origin;
    if (f.auto_approve) c.serve.auto_approve = true;
    return c;
  }

  void print_config(const RunConfig& c) { out_ << "config: " << to_snapshot(c).dump() << "\n"; }

  void build() {
    app_.description("goalpose: next-goal prediction loop, evaluation, data collection and GRPO plumbing");
    app_.require_subcommand(1);
    app_.set_help_all_flag("--help-all", "help for every subcommand");
    app_.add_option("--log-level", log_level_, "debug, info, warning, error or off (default from GOALPOSE_LOG)");
    app_.add_flag_callback(
            "--version",
            [this] {
              out_ << "goalpose " << kVersion << "\n";
              throw CLI::Success();
            },
            "print the version and exit")
        ->trigger_on_parse();

    // run
    {
      auto* sub = app_.add_subcommand("run", "run one episode and save it");
      Flags& f = flags_["run"];
      common(sub, f, true, true, true, true);
      flag(sub, f, "out", f.out, "directory for the episode JSON and frames");
      sub->add_flag("--guided", f.guided, "guided mode (human guidance comes from --guidance)");
      f.given["guidance"] = sub->add_option("--guidance", f.guidance_file,
                                            "JSON file mapping round number to guidance text; implies --guided");
      sub->callback([this] { dispatch_ = [this] { return cmd_run(); }; });
    }
    // eval
    {
      auto* sub = app_.add_subcommand("eval", "success-rate table over seeds");
      Flags& f = flags_["eval"];
      common(sub, f, true, true, true, true);
      flag(sub, f, "parallel", f.parallel, "episodes run at once");
      flag(sub, f, "out", f.out, "directory for eval_report.json (and episodes with --save-episodes)");
      sub->add_flag("--save-episodes", save_episodes_, "also write every episode under <out>/episodes");
      sub->add_flag("--json", json_output_, "print the JSON report instead of the table");
      sub->callback([this] { dispatch_ = [this] { return cmd_eval(); }; });
    }
    // serve
    {
      auto* sub = app_.add_subcommand("serve", "host the guided collection HTTP API");
      Flags& f = flags_["serve"];
      common(sub, f, false, false, true, true);
      flag(sub, f, "host", f.host, "bind address");
      flag(sub, f, "port", f.port, "TCP port");
      flag(sub, f, "data-dir", f.data_dir, "where sessions, finished episodes and exports are kept");
      flag(sub, f, "cors-origin", f.cors_origin, "Access-Control-Allow-Origin value");
      sub->add_flag("--auto-approve", f.auto_approve, "execute proposed actions without waiting for approval");
      sub->callback([this] { dispatch_ = [this] { return cmd_serve(); }; });
    }
    // rollout
    {
      auto* sub = app_.add_subcommand("rollout", "collect GRPO groups (K episodes per seed) and export them");
      Flags& f = flags_["rollout"];
      common(sub, f, true, true, true, true);
      flag(sub, f, "k", f.k, "episodes per group (K >= 2)");
      flag(sub, f, "parallel", f.parallel, "episodes of a group run at once");
      flag(sub, f, "out", f.out, "export directory (rollouts.jsonl, manifest.json, images/, logprobs/)");
      sub->add_flag("--inline-images", inline_images_, "embed PNGs as data URLs");
      sub->callback([this] { dispatch_ = [this] { return cmd_rollout(); }; });
    }
    // objective
    {
      auto* sub = app_.add_subcommand("objective", "evaluate the clipped GRPO objective for exported rollouts");
      Flags& f = flags_["objective"];
      f.given["config"] = sub->add_option("--config", f.config, "JSON config file (epsilon)");
      sub->add_option("--rollouts", in_path_, "rollout export directory")->required();
      sub->add_option("--logprobs", logprob_files_, "log-probability files, one per group")->required();
      flag(sub, f, "epsilon", f.epsilon, "clip range; inf disables clipping");
      sub->callback([this] { dispatch_ = [this] { return cmd_objective(); }; });
    }
    // export-sft
    {
      auto* sub = app_.add_subcommand("export-sft", "write the SFT corpus from successful episodes");
      sub->add_option("--in", inputs_, "episode JSON files or directories holding them")->required();
      sub->add_option("--out", out_path_, "export directory")->required();
      sub->add_flag("--inline-images", inline_images_, "embed PNGs as data URLs");
      sub->callback([this] { dispatch_ = [this] { return cmd_export(); }; });
    }
    // validate
    {
      auto* sub = app_.add_subcommand("validate", "check a dataset, rollout export, episode or log-prob file");
      sub->add_option("--file", in_path_, "export directory, .jsonl or .json file")->required();
      sub->callback([this] { dispatch_ = [this] { return cmd_validate(); }; });
    }
    // replay
    {
      auto* sub = app_.add_subcommand("replay", "re-execute stored goals and check determinism");
      auto* ep = sub->add_option("--episode", in_path_, "episode JSON file");
      auto* ds = sub->add_option("--dataset", dataset_path_, "SFT export: every conversation must replay to success");
      ep->excludes(ds);
      sub->add_option("--frames", frames_dir_, "write re-rendered frames here");
      sub->callback([this] { dispatch_ = [this] { return cmd_replay(); }; });
    }
    // stats
    {
      auto* sub = app_.add_subcommand("stats", "dataset statistics");
      sub->add_option("--file", in_path_, "export directory or .jsonl file")->required();
      sub->add_flag("--json", json_output_, "print JSON instead of text");
      sub->callback([this] { dispatch_ = [this] { return cmd_stats(); }; });
    }
  }

  // ----- subcommands ---------------------------------------------------------

  int cmd_run() {
    RunConfig c = resolve(flags_["run"]);
    validate_config(c, false);
    print_config(c);
    auto policy = make_policy(c.policy);
    const TaskSpec task = TaskSpec::from_string(c.task);
    int code = kExitOk;
    for (std::uint64_t seed : c.seeds) {
      Episode e = run_episode(task, seed, *policy, episode_options(c));
      stamp(e, c);
      const std::string path = save_episode(e, c.out);
      out_ << fmt::format("{} seed {}: {} after {} round(s), saved {}\n", task.id(), seed,
                          outcome_name(e.outcome), e.rounds.size(), path);
      if (e.error) {
        err_ << fmt::format("{}: {}\n", e.id, e.error->message);
        if (is_policy_error(e.error->code)) code = kExitPolicy;
      }
    }
    return code;
  }

  int cmd_eval() {
    RunConfig c = resolve(flags_["eval"]);
    validate_config(c, true);
    print_config(c);
    auto policy = make_policy(c.policy);
    nlohmann::json reports = nlohmann::json::array();
    bool policy_failed = false;
    std::string table = fmt::format("{:<22}{:>8}{:>10}{:>13}{:>13}\n", "task", "trials", "success",
                                    "mean_rounds", "mean_time_s");
    for (const TaskSpec& task : resolve_tasks(c.task)) {
      BatchResult batch = run_batch(task, c.seeds, *policy, episode_options(c), c.parallel);
      const SuccessReport rep = summarize(task, batch);
      reports.push_back(rep);
      table += fmt::format("{:<22}{:>8}{:>10.2f}{:>13.2f}{:>13.3f}\n", task.id(), rep.per_seed.size(),
                           rep.success_rate, rep.mean_rounds, rep.mean_wall_time);
      for (Episode& e : batch.episodes) {
        if (e.error && is_policy_error(e.error->code)) policy_failed = true;
        if (save_episodes_) {
          stamp(e, c);
          save_episode(e, (std::filesystem::path(c.out) / "episodes").string());
        }
      }
    }
    const nlohmann::json doc = {{"config", to_snapshot(c)}, {"reports", reports}};
    std::filesystem::create_directories(c.out);
    const std::string path = (std::filesystem::path(c.out) / "eval_report.json").string();
    write_file(path, doc.dump(2) + "\n");
    if (json_output_) {
      out_ << doc.dump(2) << "\n";
    } else {
      out_ << table << "report: " << path << "\n";
    }
    return policy_failed ? kExitPolicy : kExitOk;
  }

  int cmd_serve() {
    RunConfig c = resolve(flags_["serve"]);
    validate_config(c, true);
    print_config(c);
    CollectConfig cc;
    cc.host = c.serve.host;
    cc.port = c.serve.port;
    cc.data_dir = c.serve.data_dir;
    cc.auto_approve = c.serve.auto_approve;
    cc.cors_origin = c.serve.cors_origin;
    cc.episode = episode_options(c);
    cc.default_policy = c.policy.kind == PolicyKind::kOracle ? nlohmann::json("oracle") : nlohmann::json(c.policy);
    CollectService svc(cc);
    CollectServer server(svc);
    out_ << fmt::format("listening on http://{}:{} (data in {})\n", cc.host, cc.port, cc.data_dir) << std::flush;
    server.run(cc.host, cc.port);
    return kExitOk;
  }

  int cmd_rollout() {
    RunConfig c = resolve(flags_["rollout"]);
    validate_config(c, false);
    print_config(c);
    auto policy = make_policy(c.policy);
    const TaskSpec task = TaskSpec::from_string(c.task);
    std::vector<RolloutGroup> groups;
    bool policy_failed = false;
    for (std::uint64_t seed : c.seeds) {
      RolloutGroup g = collect_group(task, seed, c.k, *policy, episode_options(c), c.parallel);
      std::string rewards, adv;
      for (std::size_t i = 0; i < g.episodes.size(); ++i) {
        rewards += fmt::format(" {}", g.rewards[i]);
        adv += fmt::format(" {:.3f}", g.advantages[i]);
        const auto& err = g.episodes[i].error;
        if (err && is_policy_error(err->code)) policy_failed = true;
      }
      out_ << fmt::format("group {} K={} rewards{} advantages{}\n", g.id, g.k(), rewards, adv);
      groups.push_back(std::move(g));
    }
    const Manifest m = export_rollouts(groups, c.out, {inline_images_}, episode_options(c).prompt);
    const auto lp_dir = std::filesystem::path(c.out) / "logprobs";
    std::filesystem::create_directories(lp_dir);
    for (const auto& g : groups) {
      write_file((lp_dir / (g.id + ".json")).string(), nlohmann::json(logprob_template(g)).dump(2) + "\n");
    }
    write_file((std::filesystem::path(c.out) / "run_config.json").string(), to_snapshot(c).dump(2) + "\n");
    out_ << fmt::format("exported {} records in {} group(s) to {} (sha256 {})\n", m.records,
                        m.groups.value_or(0), c.out, m.sha256);
    return policy_failed ? kExitPolicy : kExitOk;
  }

  int cmd_objective() {
    RunConfig c = resolve(flags_["objective"]);
    if (!(c.epsilon >= 0.0)) throw Error(Errc::kInvalidArgument, "epsilon must be >= 0");
    const auto groups = groups_from_records(load_rollouts(in_path_));
    std::map<std::string, TokenLogProbs> lps;
    for (const auto& f : logprob_files_) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(f));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::kSchemaViolation, f + ": " + e.what());
      }
      TokenLogProbs lp = j.get<TokenLogProbs>();
      lps[lp.group_id] = std::move(lp);
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& g : groups) {
      auto it = lps.find(g.id);
      if (it == lps.end()) continue;
      const double v = grpo_objective(g, it->second, c.epsilon);
      out_ << fmt::format("{} {:.12g}\n", g.id, v);
      sum += v;
      ++n;
    }
    if (n != static_cast<int>(lps.size())) {
      throw Error(Errc::kMisalignedLogProbs, "a log-prob file names a group that is not in the export");
    }
    out_ << fmt::format("mean {:.12g} over {} group(s), epsilon {}\n", n ? sum / n : 0.0, n, c.epsilon);
    return kExitOk;
  }

  int cmd_export() {
    const auto episodes = load_episodes(inputs_);
    const Manifest m = export_sft(episodes, out_path_, {inline_images_});
    out_ << fmt::format("exported {} conversation(s), skipped {}, to {} (sha256 {})\n", m.records, m.skipped,
                        out_path_, m.sha256);
    for (const auto& [task, n] : m.per_task) out_ << fmt::format("  {:<22}{:>5}\n", task, n);
    return kExitOk;
  }

  int cmd_validate() {
    namespace fs = std::filesystem;
    const std::string& p = in_path_;
    if (!fs::exists(p)) throw Error(Errc::kIo, "no such file or directory: " + p);
    if (fs::is_directory(p)) {
      const Manifest m = verify_export(p);
      out_ << fmt::format("ok: {} export, {} record(s), {} image(s), sha256 {}\n", m.kind, m.records, m.images,
                          m.sha256);
      return kExitOk;
    }
    if (fs::path(p).extension() == ".jsonl") {
      const auto lines = read_jsonl(p);
      out_ << fmt::format("ok: {} record(s)\n", lines.size());
      return kExitOk;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::kSchemaViolation, p + ": " + e.what());
    }
    const std::string schema = j.is_object() ? j.value("schema", "") : "";
    if (schema == kEpisodeSchema) {
      const Episode e = episode_from_json(j);
      out_ << fmt::format("ok: episode {} ({} rounds, {})\n", e.id, e.rounds.size(), outcome_name(e.outcome));
    } else if (schema == kLogProbsSchemaId) {
      const auto lp = j.get<TokenLogProbs>();
      out_ << fmt::format("ok: log-probs for {} ({} samples)\n", lp.group_id, lp.samples.size());
    } else if (schema == kManifestSchemaId) {
      schema_by_id(kManifestSchemaId).require(j, p);
      out_ << "ok: manifest\n";
    } else if (schema == kSftSchemaId || schema == kRolloutSchemaId) {
      schema_by_id(schema).require(j, p);
      out_ << "ok: record\n";
    } else {
      throw Error(Errc::kSchemaViolation, p + ": unrecognised document (no known \"schema\" field)");
    }
    return kExitOk;
  }

  int cmd_replay() {
    if (!dataset_path_.empty()) {
      int failed = 0;
      const auto convs = load_sft(dataset_path_);
      for (const auto& c : convs) {
        const ConversationReplay r = replay_conversation(c);
        if (!r.success) {
          ++failed;
          err_ << fmt::format("{}: did not reach success ({} rounds)\n", c.id, r.rounds);
        }
      }
      out_ << fmt::format("{} of {} conversation(s) replay to success\n", convs.size() - failed, convs.size());
      return failed ? kExitReplayMismatch : kExitOk;
    }
    if (in_path_.empty()) throw Error(Errc::kInvalidArgument, "replay needs --episode or --dataset");
    const Episode e = load_episode(in_path_);
    const ReplayReport rep = replay_episode(e);
    const FrameCheck frames = check_frames(e, frames_dir_);
    for (const auto& m : rep.mismatches) err_ << "mismatch: " << m << "\n";
    for (const auto& m : frames.mismatches) err_ << "mismatch: " << m << "\n";
    const bool ok = rep.ok && frames.mismatches.empty();
    out_ << fmt::format("replay {}: {} round(s), {} frame(s) compared, final success {}\n",
                        ok ? "ok" : "FAILED", e.rounds.size(), frames.compared, rep.final_success);
    return ok ? kExitOk : kExitReplayMismatch;
  }

  int cmd_stats() {
    const DatasetStats s = dataset_stats(in_path_);
    if (json_output_) {
      out_ << nlohmann::json(s).dump(2) << "\n";
      return kExitOk;
    }
    out_ << fmt::format("conversations: {}\nassistant messages: {}\nmean assistant tokens: {:.1f}\nimages: {}\n",
                        s.conversations, s.assistant_messages, s.mean_assistant_tokens, s.images);
    out_ << "per task:\n";
    for (const auto& [t, n] : s.per_task) out_ << fmt::format("  {:<22}{:>5}\n", t, n);
    out_ << "rounds histogram:\n";
    for (const auto& [r, n] : s.rounds_histogram) out_ << fmt::format("  {:>3} rounds: {}\n", r, n);
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"goalpose", "goalpose"};
  std::map<std::string, Flags> flags_;
  std::function<int()> dispatch_;
  std::string log_level_;
  bool save_episodes_ = false;
  bool json_output_ = false;
  bool inline_images_ = false;
  std::string in_path_, dataset_path_, frames_dir_, out_path_;
  std::vector<std::string> inputs_, logprob_files_;
};

inline int main(int argc, const char* const* argv) {
  Cli cli(std::cout, std::cerr);
  return cli.run(argc, argv);
}

}  // namespace goalpose::cli

#endif  // GOALPOSE_CLI_HPP_
