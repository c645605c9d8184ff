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

#ifndef GOALPOSE_ERROR_HPP_
#define GOALPOSE_ERROR_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace goalpose {

enum class Errc {
  // geometry
  kDegenerateCloud,
  kNonOrthonormalFrame,
  kParallelAxes,
  kZeroAxis,
  // world
  kInvalidTask,
  kOutOfWorkspace,
  kInvalidGoalAxes,
  kDegenerateCamera,
  // protocol
  kTemplateSlotMissing,
  kNoActionLine,
  kWrongArity,
  kNonNumericToken,
  kAmbiguousGripperFlag,
  kMalformedScene,
  // policy
  kTimeout,
  kTransportError,
  kRemoteRefusal,
  kEmptyCompletion,
  kOracleStuck,
  // orchestration / training data
  kNotSuccessful,
  kMisalignedLogProbs,
  kSchemaViolation,
  kIo,
  kInvalidArgument,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::kDegenerateCloud: return "DegenerateCloud";
    case Errc::kNonOrthonormalFrame: return "NonOrthonormalFrame";
    case Errc::kParallelAxes: return "ParallelAxes";
    case Errc::kZeroAxis: return "ZeroAxis";
    case Errc::kInvalidTask: return "InvalidTask";
    case Errc::kOutOfWorkspace: return "OutOfWorkspace";
    case Errc::kInvalidGoalAxes: return "InvalidGoalAxes";
    case Errc::kDegenerateCamera: return "DegenerateCamera";
    case Errc::kTemplateSlotMissing: return "TemplateSlotMissing";
    case Errc::kNoActionLine: return "NoActionLine";
    case Errc::kWrongArity: return "WrongArity";
    case Errc::kNonNumericToken: return "NonNumericToken";
    case Errc::kAmbiguousGripperFlag: return "AmbiguousGripperFlag";
    case Errc::kMalformedScene: return "MalformedScene";
    case Errc::kTimeout: return "Timeout";
    case Errc::kTransportError: return "TransportError";
    case Errc::kRemoteRefusal: return "RemoteRefusal";
    case Errc::kEmptyCompletion: return "EmptyCompletion";
    case Errc::kOracleStuck: return "OracleStuck";
    case Errc::kNotSuccessful: return "NotSuccessful";
    case Errc::kMisalignedLogProbs: return "MisalignedLogProbs";
    case Errc::kSchemaViolation: return "SchemaViolation";
    case Errc::kIo: return "Io";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

inline std::optional<Errc> errc_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::kInvalidArgument); ++i) {
    if (errc_name(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

// All library failures are reported through this exception type. `code`
// identifies the failure class; `what()` carries a human readable detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  // The message without the "<Code>: " prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace goalpose

#endif  // GOALPOSE_ERROR_HPP_
