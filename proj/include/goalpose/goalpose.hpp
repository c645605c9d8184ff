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

#ifndef GOALPOSE_GOALPOSE_HPP_
#define GOALPOSE_GOALPOSE_HPP_

// Everything except the CLI front end.

#include "goalpose/codec.hpp"
#include "goalpose/error.hpp"
#include "goalpose/geometry.hpp"
#include "goalpose/log.hpp"
#include "goalpose/rng.hpp"
#include "goalpose/task.hpp"
#include "goalpose/world.hpp"
#include "goalpose/render.hpp"
#include "goalpose/protocol.hpp"
#include "goalpose/prompt_templates.hpp"
#include "goalpose/policy.hpp"
#include "goalpose/oracle.hpp"
#include "goalpose/episode.hpp"
#include "goalpose/orchestrator.hpp"
#include "goalpose/jsonschema.hpp"
#include "goalpose/schemas.hpp"
#include "goalpose/records.hpp"
#include "goalpose/dataset.hpp"
#include "goalpose/rl.hpp"
#include "goalpose/collect_api.hpp"
#include "goalpose/version.hpp"

#endif  // GOALPOSE_GOALPOSE_HPP_
