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

#ifndef GOALPOSE_LOG_HPP_
#define GOALPOSE_LOG_HPP_

#include <fmt/format.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string_view>

namespace goalpose::log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kOff = 4 };

// Threshold comes from GOALPOSE_LOG (debug|info|warning|error|off); default
// warning so library users are not spammed. set_threshold overrides it.
inline Level level_from_string(std::string_view v, Level fallback = Level::kWarning) {
  if (v == "debug") return Level::kDebug;
  if (v == "info") return Level::kInfo;
  if (v == "warning") return Level::kWarning;
  if (v == "error") return Level::kError;
  if (v == "off") return Level::kOff;
  return fallback;
}

inline std::atomic<int>& threshold_slot() {
  static std::atomic<int> slot = [] {
    const char* env = std::getenv("GOALPOSE_LOG");
    return static_cast<int>(env == nullptr ? Level::kWarning : level_from_string(env));
  }();
  return slot;
}

inline Level threshold() { return static_cast<Level>(threshold_slot().load(std::memory_order_relaxed)); }
inline void set_threshold(Level l) { threshold_slot().store(static_cast<int>(l)); }

inline void write(Level level, std::string_view msg) {
  if (level < threshold()) return;
  static std::mutex mu;
  static constexpr const char* kTags[] = {"debug", "info", "warning", "error"};
  std::lock_guard lock(mu);
  fmt::print(stderr, "[goalpose:{}] {}\n", kTags[static_cast<int>(level)], msg);
}

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() <= Level::kDebug) write(Level::kDebug, fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() <= Level::kInfo) write(Level::kInfo, fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args>
void warning(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() <= Level::kWarning) write(Level::kWarning, fmt::format(f, std::forward<Args>(args)...));
}
template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  if (threshold() <= Level::kError) write(Level::kError, fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace goalpose::log

#endif  // GOALPOSE_LOG_HPP_
