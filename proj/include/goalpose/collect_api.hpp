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

#ifndef GOALPOSE_COLLECT_API_HPP_
#define GOALPOSE_COLLECT_API_HPP_

// Guided data collection over HTTP. CollectService holds the sessions and
// the phase machine and answers (method, path, body) triples; CollectServer
// puts it behind cpp-httplib.
//
//   awaiting_guidance --guidance--> querying_policy --reply parsed--> awaiting_approval
//   awaiting_approval --approve--> executing --> awaiting_guidance | done
//   awaiting_approval --reject--> awaiting_guidance
//   querying_policy --policy error / unparseable reply--> awaiting_guidance | done
//
// Sessions are written to <data_dir>/sessions/<id>.json on every transition
// and rebuilt on start by re-executing the stored goals.

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/dataset.hpp"
#include "goalpose/episode.hpp"
#include "goalpose/log.hpp"
#include "goalpose/oracle.hpp"
#include "goalpose/orchestrator.hpp"
#include "goalpose/policy.hpp"
#include "goalpose/render.hpp"

namespace goalpose {

using detail::json_opt;
using detail::opt_json;

enum class Phase { kAwaitingGuidance, kQueryingPolicy, kAwaitingApproval, kExecuting, kDone };

inline std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kAwaitingGuidance: return "awaiting_guidance";
    case Phase::kQueryingPolicy: return "querying_policy";
    case Phase::kAwaitingApproval: return "awaiting_approval";
    case Phase::kExecuting: return "executing";
    case Phase::kDone: return "done";
  }
  return "done";
}

inline Phase phase_from_string(std::string_view s) {
  for (Phase p : {Phase::kAwaitingGuidance, Phase::kQueryingPolicy, Phase::kAwaitingApproval,
                  Phase::kExecuting, Phase::kDone}) {
    if (phase_name(p) == s) return p;
  }
  throw Error(Errc::kSchemaViolation, "unknown phase '" + std::string(s) + "'");
}

// Builds a policy from the "policy" field of POST /sessions.
using PolicyFactory = std::function<std::shared_ptr<Policy>(const nlohmann::json& spec)>;

// "oracle", or a policy config object ({"kind": "remote", ...}).
inline std::shared_ptr<Policy> default_policy_factory(const nlohmann::json& spec) {
  if (spec == "oracle") return std::make_shared<OraclePolicy>();
  if (!spec.is_object()) throw Error(Errc::kInvalidArgument, "policy must be \"oracle\" or an object");
  PolicyConfig cfg;
  try {
    cfg = spec.get<PolicyConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("policy: ") + e.what());
  }
  return make_policy(cfg);
}

struct CollectConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;  // empty: sessions live in memory only
  bool auto_approve = false;
  std::string cors_origin = "*";
  EpisodeOptions episode;  // defaults for new sessions
  nlohmann::json default_policy = "oracle";
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  static ApiResponse json(int status, const nlohmann::json& j) { return {status, j.dump(), "application/json"}; }
  static ApiResponse error(int status, std::string_view code, const std::string& message) {
    return json(status, {{"error", code}, {"message", message}});
  }
};

inline constexpr const char* kSessionSchema = "goalpose.session/1";
inline constexpr double kOverlayAxisLength = 0.08;  // m, arrow length in overlays

class CollectService {
 public:
  explicit CollectService(CollectConfig cfg, PolicyFactory factory = default_policy_factory)
      : cfg_(std::move(cfg)), factory_(std::move(factory)) {
    cfg_.episode.mode = EpisodeMode::kGuided;
    restore();
  }

  const CollectConfig& config() const { return cfg_; }

  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body) {
    static const std::regex kSession(R"(^/sessions/([A-Za-z0-9_.-]+)(/[a-z]+)?(/([0-9]+))?/?$)");
    try {
      if (method == "OPTIONS") return {204, "", "text/plain"};
      if (path == "/sessions" || path == "/sessions/") {
        if (method == "POST") return create(body);
        if (method == "GET") return list();
        return ApiResponse::error(405, "MethodNotAllowed", method + " " + path);
      }
      std::smatch m;
      if (!std::regex_match(path, m, kSession)) return ApiResponse::error(404, "NotFound", path);
      const std::shared_ptr<Session> s = find(m[1]);
      if (!s) return ApiResponse::error(404, "UnknownSession", m[1]);
      const std::string action = m[2].matched ? std::string(m[2]).substr(1) : "";
      if (m[3].matched && action != "frames") return ApiResponse::error(404, "NotFound", path);
      if (method == "GET") {
        if (action.empty()) return read(*s);
        if (action == "render") return render_current(*s);
        if (action == "frames" && m[3].matched) return frame(*s, std::stoi(m[4]));
      } else if (method == "POST") {
        if (action == "guidance") return guidance(*s, body);
        if (action == "approve") return approve(*s);
        if (action == "reject") return reject(*s, body);
        if (action == "export") return export_session(*s);
      }
      return ApiResponse::error(action.empty() || action == "render" || action == "guidance" ||
                                        action == "approve" || action == "reject" ||
                                        action == "export" || action == "frames"
                                    ? 405
                                    : 404,
                                "NotFound", method + " " + path);
    } catch (const Error& e) {
      log::error("{} {}: {}", method, path, e.what());
      return ApiResponse::error(500, errc_name(e.code()), e.what());
    } catch (const std::exception& e) {
      log::error("{} {}: {}", method, path, e.what());
      return ApiResponse::error(500, "Internal", e.what());
    }
  }

  // Snapshot of one session as served by GET /sessions/{id}.
  std::optional<nlohmann::json> state(const std::string& id) {
    auto s = find(id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mu);
    return state_json(*s);
  }

  std::vector<std::string> session_ids() const {
    std::shared_lock lock(sessions_mu_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
  }

 private:
  struct Session {
    std::string id;
    nlohmann::json policy_spec;
    std::shared_ptr<Policy> policy;
    bool auto_approve = false;
    std::unique_ptr<EpisodeRunner> runner;
    Phase phase = Phase::kAwaitingGuidance;
    std::optional<Round> pending;
    std::vector<std::string> rejections;
    std::optional<std::string> carry;  // rejection reason for the next query
    std::optional<ErrorNote> note;     // last problem shown to the operator
    std::optional<std::string> exported;
    std::mutex mu;
  };

  // ----- helpers ------------------------------------------------------------

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  static std::optional<nlohmann::json> parse_body(const std::string& body) {
    if (body.empty()) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(body);
      if (!j.is_object()) return std::nullopt;
      return j;
    } catch (const nlohmann::json::parse_error&) {
      return std::nullopt;
    }
  }

  static ApiResponse wrong_phase(const Session& s, std::string_view want) {
    return ApiResponse::error(409, "WrongPhase",
                              fmt::format("session {} is {}, needs {}", s.id, phase_name(s.phase), want));
  }

  nlohmann::json overlay(const Session& s, const GripperGoal& g) const {
    const CameraSpec& cam = s.runner->options().camera;
    auto px = [&](const Vec3& p) -> nlohmann::json {
      const auto uv = project_point(cam, p);
      return uv ? nlohmann::json{(*uv)[0], (*uv)[1]} : nlohmann::json(nullptr);
    };
    return {{"origin", px(g.position)},
            {"longitudinal_tip", px(g.position + kOverlayAxisLength * g.longitudinal.vec())},
            {"binormal_tip", px(g.position + kOverlayAxisLength * g.binormal.vec())}};
  }

  nlohmann::json pending_json(const Session& s) const {
    if (!s.pending) return nullptr;
    const Round& r = *s.pending;
    nlohmann::json j = {{"round", r.index},
                        {"assistant_text", r.assistant_text},
                        {"guidance", opt_json(r.guidance)},
                        {"action", r.parsed->action_vector},
                        {"values", r.parsed->raw_values},
                        {"goal", r.parsed->goal},
                        {"warnings", r.parsed->warnings},
                        {"overlay", overlay(s, r.parsed->goal)}};
    return j;
  }

  nlohmann::json state_json(Session& s) const {
    EpisodeRunner& run = *s.runner;
    const Episode& e = run.episode();
    nlohmann::json conv = nlohmann::json::array();
    auto add = [&](const Message& m, std::optional<int> frame, bool pending) {
      nlohmann::json j = {{"role", role_name(m.role)}, {"content", m.text}};
      j["frame"] = frame ? nlohmann::json(fmt::format("/sessions/{}/frames/{}", s.id, *frame))
                         : nlohmann::json(nullptr);
      if (pending) j["pending"] = true;
      conv.push_back(std::move(j));
    };
    int user_round = 0;
    for (const Message& m : conversation_messages(conversation_of(e), run.options().prompt)) {
      if (m.role == Role::kUser) ++user_round;
      add(m, m.role == Role::kUser ? std::optional<int>(user_round) : std::nullopt, false);
    }
    if (s.pending) {
      ConversationState c = conversation_of(e);
      const Round& r = *s.pending;
      add({Role::kUser, round_user_text(c, c.turns.size(), r.scene_text, r.guidance), {}},
          std::nullopt, true);
      add({Role::kAssistant, r.assistant_text, {}}, std::nullopt, true);
    }
    nlohmann::json rounds = nlohmann::json::array();
    for (const Round& r : e.rounds) rounds.push_back(round_to_json(r));
    return {{"id", s.id},
            {"task", e.task.id()},
            {"instruction", e.task.instruction()},
            {"seed", e.seed},
            {"created_at", e.created_at},
            {"representation", representation_name(e.representation)},
            {"policy", s.policy_spec},
            {"auto_approve", s.auto_approve},
            {"phase", phase_name(s.phase)},
            {"round", run.done() ? static_cast<int>(e.rounds.size()) : run.next_round()},
            {"outcome", run.done() ? nlohmann::json(outcome_name(e.outcome)) : nlohmann::json(nullptr)},
            {"success", run.done() && e.outcome == Outcome::kSuccess},
            {"scene_text", run.done() ? serialize_scene(scene_snapshot(run.world()),
                                                        {e.representation, 3})
                                      : run.observation().scene_text},
            {"camera", run.options().camera},
            {"render", fmt::format("/sessions/{}/render", s.id)},
            {"conversation", conv},
            {"rounds", rounds},
            {"pending_action", pending_json(s)},
            {"rejections", s.rejections},
            {"error", opt_json(s.note)},
            {"export", opt_json(s.exported)}};
  }

  std::filesystem::path data_path(const std::string& sub) const {
    namespace fs = std::filesystem;
    return cfg_.data_dir.empty() ? fs::temp_directory_path() / "goalpose_collect" / sub
                                 : fs::path(cfg_.data_dir) / sub;
  }

  void persist(Session& s) const {
    if (cfg_.data_dir.empty()) return;
    namespace fs = std::filesystem;
    const EpisodeRunner& run = *s.runner;
    const EpisodeOptions& o = run.options();
    nlohmann::json j = {{"schema", kSessionSchema},
                        {"id", s.id},
                        {"policy", s.policy_spec},
                        {"auto_approve", s.auto_approve},
                        {"options",
                         {{"representation", representation_name(o.representation)},
                          {"max_rounds", o.max_rounds},
                          {"parse_abort_after", o.parse_abort_after},
                          {"camera", o.camera}}},
                        {"phase", phase_name(s.phase)},
                        {"pending", s.pending ? round_to_json(*s.pending) : nlohmann::json(nullptr)},
                        {"rejections", s.rejections},
                        {"carry", opt_json(s.carry)},
                        {"note", opt_json(s.note)},
                        {"export", opt_json(s.exported)},
                        {"episode", episode_to_json(run.episode())}};
    const fs::path dir = data_path("sessions");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::kIo, "cannot create " + dir.string());
    // write-then-rename so a crash never leaves half a file
    const fs::path tmp = dir / (s.id + ".json.tmp");
    write_file(tmp.string(), j.dump(2) + "\n");
    fs::rename(tmp, dir / (s.id + ".json"), ec);
    if (ec) throw Error(Errc::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
    if (s.phase == Phase::kDone) save_episode(run.episode(), data_path("episodes").string());
  }

  void restore() {
    namespace fs = std::filesystem;
    if (cfg_.data_dir.empty()) return;
    const fs::path dir = data_path("sessions");
    if (!fs::is_directory(dir)) return;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto s = load_session(f.string());
      const auto n = session_number(s->id);
      if (n) next_id_ = std::max(next_id_, *n);
      sessions_[s->id] = std::move(s);
    }
    if (!files.empty()) log::info("restored {} session(s) from {}", files.size(), dir.string());
  }

  static std::optional<int> session_number(const std::string& id) {
    static const std::regex kId(R"(^session-([0-9]+)$)");
    std::smatch m;
    if (!std::regex_match(id, m, kId)) return std::nullopt;
    return std::stoi(m[1]);
  }

  std::shared_ptr<Session> load_session(const std::string& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::kSchemaViolation, path + ": " + e.what());
    }
    if (j.value("schema", "") != kSessionSchema) throw Error(Errc::kSchemaViolation, path + ": not a session");
    const Episode stored = episode_from_json(j.at("episode"));
    auto s = std::make_shared<Session>();
    s->id = j.at("id");
    s->policy_spec = j.at("policy");
    s->policy = factory_(s->policy_spec);
    s->auto_approve = j.at("auto_approve");
    EpisodeOptions o = cfg_.episode;
    const auto& oj = j.at("options");
    o.representation = representation_from_string(oj.at("representation").get<std::string>());
    o.max_rounds = oj.at("max_rounds");
    o.parse_abort_after = oj.at("parse_abort_after");
    o.camera = oj.at("camera").get<CameraSpec>();
    o.id = s->id;
    s->runner = std::make_unique<EpisodeRunner>(stored.task, stored.seed, o, s->policy->describe());
    EpisodeRunner& run = *s->runner;
    // Replay: each stored round is re-observed and its goal re-executed; the
    // scene text and world digest must come out the same.
    for (Round r : stored.rounds) {
      const Observation& obs = run.observation();
      if (obs.scene_text != r.scene_text) {
        throw Error(Errc::kSchemaViolation,
                    fmt::format("{}: round {} scene differs on replay", s->id, r.index));
      }
      r.image = obs.image;
      const std::string want = r.world_hash;
      if (run.commit(std::move(r)).world_hash != want) {
        throw Error(Errc::kSchemaViolation,
                    fmt::format("{}: world diverged on replay", s->id));
      }
    }
    run.episode().created_at = stored.created_at;
    run.episode().config = stored.config;
    s->phase = phase_from_string(j.at("phase").get<std::string>());
    s->rejections = j.at("rejections").get<std::vector<std::string>>();
    s->carry = json_opt<std::string>(j, "carry");
    s->note = json_opt<ErrorNote>(j, "note");
    s->exported = json_opt<std::string>(j, "export");
    if (!j.at("pending").is_null()) {
      Round p = round_from_json(j.at("pending"));
      p.image = run.observation().image;
      s->pending = std::move(p);
    }
    if (s->phase == Phase::kQueryingPolicy || s->phase == Phase::kExecuting) {
      // interrupted mid-transition; the operator resubmits
      s->phase = Phase::kAwaitingGuidance;
      s->pending.reset();
      s->note = ErrorNote{"Interrupted", "service restarted during a transition"};
    }
    if (run.done() != (s->phase == Phase::kDone)) {
      throw Error(Errc::kSchemaViolation, s->id + ": stored phase disagrees with replayed outcome");
    }
    return s;
  }

  // Executes the pending goal. Caller holds the lock.
  nlohmann::json execute(Session& s) {
    s.phase = Phase::kExecuting;
    Round r = std::move(*s.pending);
    s.pending.reset();
    const Round& done = s.runner->commit(std::move(r));
    s.note = done.step_error;
    s.phase = s.runner->done() ? Phase::kDone : Phase::kAwaitingGuidance;
    return {{"round", done.index},
            {"step", opt_json(done.step)},
            {"step_error", opt_json(done.step_error)},
            {"success", done.success_after}};
  }

  // ----- endpoints ------------------------------------------------------------

  ApiResponse create(const std::string& body) {
    const auto j = parse_body(body);
    if (!j) return ApiResponse::error(422, "MalformedBody", "body must be a JSON object");
    TaskSpec task;
    std::uint64_t seed = 0;
    EpisodeOptions o = cfg_.episode;
    auto s = std::make_shared<Session>();
    try {
      if (!j->contains("task") || !(*j)["task"].is_string()) {
        return ApiResponse::error(422, "MalformedBody", "task (string) is required");
      }
      task = TaskSpec::from_string((*j)["task"].get<std::string>());
      if (j->contains("seed")) {
        if (!(*j)["seed"].is_number_unsigned()) {
          return ApiResponse::error(422, "MalformedBody", "seed must be a non-negative integer");
        }
        seed = (*j)["seed"].get<std::uint64_t>();
      }
      if (j->contains("representation")) {
        if (!(*j)["representation"].is_string()) {
          return ApiResponse::error(422, "MalformedBody", "representation must be a string");
        }
        o.representation = representation_from_string((*j)["representation"].get<std::string>());
      }
      if (j->contains("max_rounds")) {
        if (!(*j)["max_rounds"].is_number_integer() || (*j)["max_rounds"].get<int>() < 1) {
          return ApiResponse::error(422, "MalformedBody", "max_rounds must be a positive integer");
        }
        o.max_rounds = (*j)["max_rounds"];
      }
      s->auto_approve = cfg_.auto_approve;
      if (j->contains("auto_approve")) {
        if (!(*j)["auto_approve"].is_boolean()) {
          return ApiResponse::error(422, "MalformedBody", "auto_approve must be a boolean");
        }
        s->auto_approve = (*j)["auto_approve"];
      }
      s->policy_spec = j->contains("policy") ? (*j)["policy"] : cfg_.default_policy;
      s->policy = factory_(s->policy_spec);
    } catch (const Error& e) {
      return ApiResponse::error(422, errc_name(e.code()), e.what());
    }
    {
      std::unique_lock lock(sessions_mu_);
      s->id = fmt::format("session-{:04d}", ++next_id_);
    }
    o.id = s->id;
    s->runner = std::make_unique<EpisodeRunner>(task, seed, o, s->policy->describe());
    std::lock_guard lock(s->mu);
    persist(*s);
    {
      std::unique_lock lock2(sessions_mu_);
      sessions_[s->id] = s;
    }
    log::info("session {} created: {} seed {}", s->id, task.id(), seed);
    return ApiResponse::json(201, state_json(*s));
  }

  ApiResponse list() const {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::shared_lock lock(sessions_mu_);
      for (const auto& [id, s] : sessions_) all.push_back(s);
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : all) {
      std::lock_guard lock(s->mu);
      const Episode& e = s->runner->episode();
      out.push_back({{"id", s->id},
                     {"task", e.task.id()},
                     {"seed", e.seed},
                     {"phase", phase_name(s->phase)},
                     {"rounds", e.rounds.size()},
                     {"success", s->runner->done() && e.outcome == Outcome::kSuccess}});
    }
    return ApiResponse::json(200, out);
  }

  ApiResponse read(Session& s) const {
    std::lock_guard lock(s.mu);
    return ApiResponse::json(200, state_json(s));
  }

  ApiResponse render_current(Session& s) const {
    std::lock_guard lock(s.mu);
    EpisodeRunner& run = *s.runner;
    if (run.done()) {
      const Bytes png = render(run.world(), run.options().camera).to_png();
      return {200, std::string(png.begin(), png.end()), "image/png"};
    }
    const Bytes& png = *run.observation().image.png;
    return {200, std::string(png.begin(), png.end()), "image/png"};
  }

  ApiResponse frame(Session& s, int round) const {
    std::lock_guard lock(s.mu);
    const auto& rounds = s.runner->episode().rounds;
    if (round < 1 || round > static_cast<int>(rounds.size())) {
      return ApiResponse::error(404, "NoSuchFrame", fmt::format("round {}", round));
    }
    const Bytes png = image_bytes(rounds[round - 1].image, s.runner->episode().root);
    return {200, std::string(png.begin(), png.end()), "image/png"};
  }

  ApiResponse guidance(Session& s, const std::string& body) {
    const auto j = parse_body(body);
    if (!j || (j->contains("text") && !(*j)["text"].is_string())) {
      return ApiResponse::error(422, "MalformedBody", R"(expected {"text": string})");
    }
    const std::string text = j->value("text", "");
    EpisodeRunner::PreparedQuery q;
    {
      std::lock_guard lock(s.mu);
      if (s.phase != Phase::kAwaitingGuidance) return wrong_phase(s, "awaiting_guidance");
      std::string g = text;
      if (s.carry) {
        g = fmt::format("The previous proposal was rejected: {}", *s.carry) +
            (text.empty() ? "" : "\n\n" + text);
      }
      q = s.runner->prepare_query(g.empty() ? std::nullopt : std::optional<std::string>(g));
      s.phase = Phase::kQueryingPolicy;
      s.note.reset();
      persist(s);
    }
    // The lock is released while the policy thinks; other requests on this
    // session see querying_policy and get 409 for transitions.
    std::optional<Round> reply;
    std::optional<ErrorNote> failure;
    try {
      reply = EpisodeRunner::complete_query(std::move(q), *s.policy);
    } catch (const Error& e) {
      failure = note_of(e);
    } catch (const std::exception& e) {
      failure = ErrorNote{"Internal", e.what()};
    }
    std::lock_guard lock(s.mu);
    if (failure) {
      log::warning("session {}: policy failed: {}", s.id, failure->message);
      s.phase = Phase::kAwaitingGuidance;
      s.note = failure;
    } else if (!reply->parsed) {
      // Recorded like the automatic loop does, so repeated nonsense ends
      // the episode with parse_abort.
      s.carry.reset();
      const Round& r = s.runner->commit(std::move(*reply));
      s.note = r.parse_error;
      s.phase = s.runner->done() ? Phase::kDone : Phase::kAwaitingGuidance;
    } else {
      s.carry.reset();
      s.pending = std::move(*reply);
      s.phase = Phase::kAwaitingApproval;
      if (s.auto_approve) execute(s);
    }
    persist(s);
    return ApiResponse::json(200, state_json(s));
  }

  ApiResponse approve(Session& s) {
    std::lock_guard lock(s.mu);
    if (s.phase != Phase::kAwaitingApproval) return wrong_phase(s, "awaiting_approval");
    nlohmann::json out = execute(s);
    persist(s);
    out["state"] = state_json(s);
    return ApiResponse::json(200, out);
  }

  ApiResponse reject(Session& s, const std::string& body) {
    const auto j = parse_body(body);
    if (!j || (j->contains("reason") && !(*j)["reason"].is_string())) {
      return ApiResponse::error(422, "MalformedBody", R"(expected {"reason": string})");
    }
    std::lock_guard lock(s.mu);
    if (s.phase != Phase::kAwaitingApproval) return wrong_phase(s, "awaiting_approval");
    const std::string reason = j->value("reason", "");
    s.rejections.push_back(reason);
    s.carry = reason.empty() ? "no reason given" : reason;
    s.pending.reset();
    s.phase = Phase::kAwaitingGuidance;
    persist(s);
    return ApiResponse::json(200, state_json(s));
  }

  ApiResponse export_session(Session& s) {
    std::lock_guard lock(s.mu);
    const Episode& e = s.runner->episode();
    if (s.phase != Phase::kDone || e.outcome != Outcome::kSuccess) {
      return ApiResponse::error(409, "WrongPhase",
                                fmt::format("session {} is {} and not successful", s.id, phase_name(s.phase)));
    }
    const std::string dir = data_path("exports/" + s.id).string();
    const Manifest m = export_sft({e}, dir);
    s.exported = dir;
    persist(s);
    return ApiResponse::json(200, {{"path", dir},
                                   {"data", (std::filesystem::path(dir) / m.data).string()},
                                   {"manifest", m}});
  }

  CollectConfig cfg_;
  PolicyFactory factory_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int next_id_ = 0;
};

// HTTP front end. Every route is delegated to CollectService::handle.
class CollectServer {
 public:
  explicit CollectServer(CollectService& svc) : svc_(svc) {
    const std::string origin = svc_.config().cors_origin;
    server_.set_default_headers({{"Access-Control-Allow-Origin", origin},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      const ApiResponse r = svc_.handle(req.method, req.path, req.body);
      res.status = r.status;
      if (!r.body.empty()) res.set_content(r.body, r.content_type);
    };
    server_.Get(R"(/.*)", route);
    server_.Post(R"(/.*)", route);
    server_.Options(R"(/.*)", route);
  }

  ~CollectServer() { stop(); }

  // Binds host:port (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host, int port) {
    bound_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound_ < 0) throw Error(Errc::kIo, fmt::format("cannot bind {}:{}", host, port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound_;
  }

  // Serves on the calling thread until stop().
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw Error(Errc::kIo, fmt::format("cannot listen on {}:{}", host, port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return bound_; }

 private:
  CollectService& svc_;
  httplib::Server server_;
  std::thread thread_;
  int bound_ = -1;
};

}  // namespace goalpose

#endif  // GOALPOSE_COLLECT_API_HPP_
