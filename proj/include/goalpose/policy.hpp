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

#ifndef GOALPOSE_POLICY_HPP_
#define GOALPOSE_POLICY_HPP_

// Policies turn a message history into assistant text. RemotePolicy speaks the
// OpenAI-style chat-completions wire format; the scripted experts live in
// oracle.hpp.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "goalpose/codec.hpp"
#include "goalpose/error.hpp"
#include "goalpose/log.hpp"
#include "goalpose/protocol.hpp"
#include "goalpose/world.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro
// that collides with Eigen parameter names.
#include <httplib.h>

namespace goalpose {

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct PolicyReply {
  std::string text;
  double latency = 0.0;  // s
  std::optional<TokenUsage> token_usage;
  int retries = 0;
};

// What a policy may look at besides the messages. Only scripted policies read
// the world; a remote model sees the messages alone.
struct PolicyContext {
  const WorldState* world = nullptr;
  int round = 1;         // 1-based
  int sample_index = 0;  // k within a rollout group
  Representation representation = Representation::kAxis;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyReply complete(const std::vector<Message>& messages,
                               const PolicyContext& ctx) = 0;
  // Snapshot for episode provenance. Never contains secrets.
  virtual nlohmann::json describe() const = 0;
};

// ---------------------------------------------------------------------------

enum class PolicyKind { kRemote, kOracle };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kOracle;
  std::string endpoint;          // base URL, e.g. http://127.0.0.1:8000/v1
  std::string model;
  std::string api_key_env;       // name of the variable holding the key
  double temperature = 0.0;      // 0.7 is the usual choice for rollouts
  double timeout = 60.0;         // s, per attempt
  int max_retries = 3;
  double backoff_base = 1.0;     // s
  double backoff_factor = 2.0;
  int max_concurrency = 8;
  int max_tokens = 2048;

  void validate() const {
    if (kind != PolicyKind::kRemote) return;
    if (endpoint.empty() || model.empty() || api_key_env.empty()) {
      throw Error(Errc::kInvalidArgument,
                  "remote policy needs endpoint, model and api_key_env");
    }
    if (temperature < 0.0 || timeout <= 0.0 || max_retries < 0 || max_concurrency < 1) {
      throw Error(Errc::kInvalidArgument, "policy numeric settings out of range");
    }
  }
};

inline std::string_view policy_kind_name(PolicyKind k) {
  return k == PolicyKind::kRemote ? "remote" : "oracle";
}

inline PolicyKind policy_kind_from_string(std::string_view s) {
  if (s == "remote") return PolicyKind::kRemote;
  if (s == "oracle") return PolicyKind::kOracle;
  throw Error(Errc::kInvalidArgument, "unknown policy kind '" + std::string(s) + "'");
}

inline void to_json(nlohmann::json& j, const PolicyConfig& c) {
  j = {{"kind", policy_kind_name(c.kind)},
       {"endpoint", c.endpoint},
       {"model", c.model},
       {"api_key_env", c.api_key_env},
       {"temperature", c.temperature},
       {"timeout", c.timeout},
       {"max_retries", c.max_retries},
       {"backoff_base", c.backoff_base},
       {"backoff_factor", c.backoff_factor},
       {"max_concurrency", c.max_concurrency},
       {"max_tokens", c.max_tokens}};
}

inline void from_json(const nlohmann::json& j, PolicyConfig& c) {
  PolicyConfig d;
  c.kind = policy_kind_from_string(j.value("kind", std::string("oracle")));
  c.endpoint = j.value("endpoint", d.endpoint);
  c.model = j.value("model", d.model);
  c.api_key_env = j.value("api_key_env", d.api_key_env);
  c.temperature = j.value("temperature", d.temperature);
  c.timeout = j.value("timeout", d.timeout);
  c.max_retries = j.value("max_retries", d.max_retries);
  c.backoff_base = j.value("backoff_base", d.backoff_base);
  c.backoff_factor = j.value("backoff_factor", d.backoff_factor);
  c.max_concurrency = j.value("max_concurrency", d.max_concurrency);
  c.max_tokens = j.value("max_tokens", d.max_tokens);
}

// ---------------------------------------------------------------------------

namespace detail {

// Counting gate shared by every copy of a RemotePolicy.
class RequestGate {
 public:
  explicit RequestGate(int limit) : free_(limit) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path for chat completions
};

inline ParsedUrl split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(Errc::kInvalidArgument, "endpoint must start with http:// or https://");
  }
  const auto slash = endpoint.find('/', scheme + 3);
  ParsedUrl u;
  u.origin = endpoint.substr(0, slash);
  std::string path = slash == std::string::npos ? "" : endpoint.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  constexpr std::string_view kSuffix = "/chat/completions";
  if (path.size() < kSuffix.size() ||
      path.compare(path.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
    path += kSuffix;
  }
  u.path = path;
  return u;
}

inline std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto at = text.find(secret); at != std::string::npos; at = text.find(secret, at)) {
    text.replace(at, secret.size(), "***");
  }
  return text;
}

}  // namespace detail

// Chat-completions body for a message list. Each "<image>" token in a user
// message becomes an image_url part carrying the PNG as a base64 data URL.
inline nlohmann::json chat_request_body(const std::vector<Message>& messages,
                                        const PolicyConfig& cfg) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const Message& m : messages) {
    if (m.images.empty()) {
      msgs.push_back({{"role", role_name(m.role)}, {"content", m.text}});
      continue;
    }
    nlohmann::json parts = nlohmann::json::array();
    std::string_view rest = m.text;
    std::size_t img = 0;
    while (true) {
      const auto at = rest.find(kImageToken);
      const std::string_view before = rest.substr(0, at);
      if (!before.empty()) parts.push_back({{"type", "text"}, {"text", before}});
      if (at == std::string_view::npos) break;
      if (img < m.images.size()) {
        const std::string url =
            "data:image/png;base64," + base64_encode(m.images[img].bytes());
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
        ++img;
      }
      rest = rest.substr(at + kImageToken.size());
    }
    msgs.push_back({{"role", role_name(m.role)}, {"content", parts}});
  }
  return {{"model", cfg.model},
          {"messages", msgs},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens}};
}

class RemotePolicy : public Policy {
 public:
  explicit RemotePolicy(PolicyConfig cfg)
      : cfg_(std::move(cfg)),
        gate_(std::make_shared<detail::RequestGate>(cfg_.max_concurrency)) {
    cfg_.validate();
    url_ = detail::split_endpoint(cfg_.endpoint);
  }

  PolicyReply complete(const std::vector<Message>& messages,
                       const PolicyContext& /*ctx*/) override {
    const char* key_env = std::getenv(cfg_.api_key_env.c_str());
    const std::string key = key_env != nullptr ? key_env : "";
    const std::string body = chat_request_body(messages, cfg_).dump();
    log::debug("POST {}{} ({} bytes) key=***", url_.origin, url_.path, body.size());

    const auto start = std::chrono::steady_clock::now();
    gate_->acquire();
    struct Release {
      detail::RequestGate* g;
      ~Release() { g->release(); }
    } release{gate_.get()};

    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
    Errc last_code = Errc::kTransportError;
    std::string last_detail;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        const double base = cfg_.backoff_base * std::pow(cfg_.backoff_factor, attempt - 1);
        const double wait = base * std::uniform_real_distribution<double>(1.0, 1.25)(jitter_rng);
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      }
      httplib::Client client(url_.origin);
      const auto to = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(cfg_.timeout));
      client.set_connection_timeout(to);
      client.set_read_timeout(to);
      client.set_write_timeout(to);
      httplib::Headers headers;
      if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
      const auto res = client.Post(url_.path, headers, body, "application/json");
      if (!res) {
        const httplib::Error err = res.error();
        last_code = err == httplib::Error::ConnectionTimeout ||
                            err == httplib::Error::Read
                        ? Errc::kTimeout
                        : Errc::kTransportError;
        if (err == httplib::Error::Read) {
          // httplib reports an expired read timeout as a read failure.
          const double elapsed = std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - start)
                                     .count();
          if (elapsed < cfg_.timeout) last_code = Errc::kTransportError;
        }
        last_detail = httplib::to_string(err);
        log::warning("policy request attempt {} failed: {}", attempt + 1, last_detail);
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last_code = Errc::kRemoteRefusal;
        last_detail = fmt::format("HTTP {}", res->status);
        log::warning("policy request attempt {} got HTTP {}: {}", attempt + 1, res->status,
                     detail::redact(res->body.substr(0, 512), key));
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw Error(Errc::kRemoteRefusal,
                    fmt::format("HTTP {}: {}", res->status,
                                detail::redact(res->body.substr(0, 512), key)));
      }
      log::debug("policy response: {}", detail::redact(res->body.substr(0, 2048), key));
      PolicyReply reply;
      reply.retries = attempt;
      reply.latency =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception&) {
        throw Error(Errc::kTransportError, "response is not JSON");
      }
      const auto& choices = j.value("choices", nlohmann::json::array());
      if (choices.empty() || !choices[0].contains("message") ||
          !choices[0]["message"].value("content", nlohmann::json()).is_string()) {
        throw Error(Errc::kEmptyCompletion, "response has no message content");
      }
      reply.text = choices[0]["message"]["content"].get<std::string>();
      if (reply.text.empty()) throw Error(Errc::kEmptyCompletion, "empty completion");
      if (j.contains("usage") && j["usage"].is_object()) {
        reply.token_usage = TokenUsage{j["usage"].value("prompt_tokens", 0),
                                       j["usage"].value("completion_tokens", 0)};
      }
      return reply;
    }
    throw Error(last_code, fmt::format("after {} attempts: {}", cfg_.max_retries + 1,
                                       last_detail));
  }

  nlohmann::json describe() const override { return cfg_; }
  const PolicyConfig& config() const { return cfg_; }

 private:
  PolicyConfig cfg_;
  detail::ParsedUrl url_;
  std::shared_ptr<detail::RequestGate> gate_;
};

}  // namespace goalpose

#endif  // GOALPOSE_POLICY_HPP_
