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
#ifndef GOALPOSE_SCHEMAS_HPP_
#define GOALPOSE_SCHEMAS_HPP_

// Generated by tools/embed_schemas.py from docs/schemas. Do not edit;
// the unit suite fails if the two drift apart.

#include <string_view>

namespace goalpose::schemas {

inline constexpr std::string_view kSftRecord = R"schema({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "$id": "goalpose.sft/1",
  "title": "SFT conversation record (one JSONL line)",
  "type": "object",
  "additionalProperties": false,
  "required": [
    "schema",
    "id",
    "task",
    "task_params",
    "seed",
    "source_episode",
    "representation",
    "messages"
  ],
  "properties": {
    "schema": {
      "const": "goalpose.sft/1"
    },
    "id": {
      "type": "string",
      "pattern": "^[A-Za-z0-9_.-]+$"
    },
    "task": {
      "$ref": "#/$defs/task"
    },
    "task_params": {
      "$ref": "#/$defs/task_params"
    },
    "seed": {
      "type": "integer",
      "minimum": 0
    },
    "source_episode": {
      "type": "string",
      "minLength": 1
    },
    "representation": {
      "enum": [
        "axis",
        "euler"
      ]
    },
    "messages": {
      "type": "array",
      "minItems": 3,
      "items": {
        "$ref": "#/$defs/message"
      }
    }
  },
  "$defs": {
    "task": {
      "enum": [
        "lift_can",
        "move_near",
        "stack_cube",
        "put_carrot_on_plate",
        "put_spoon_on_towel",
        "drawer_open",
        "drawer_close"
      ]
    },
    "task_params": {
      "type": "object",
      "additionalProperties": false,
      "required": [
        "lift_height",
        "near_distance",
        "support_gap",
        "footprint_fraction",
        "drawer_open_min",
        "drawer_close_max"
      ],
      "properties": {
        "lift_height": {
          "type": "number"
        },
        "near_distance": {
          "type": "number"
        },
        "support_gap": {
          "type": "number"
        },
        "footprint_fraction": {
          "type": "number"
        },
        "drawer_open_min": {
          "type": "number"
        },
        "drawer_close_max": {
          "type": "number"
        }
      }
    },
    "image": {
      "type": "string",
      "pattern": "^(images/[A-Za-z0-9_.-]+/round_[0-9]{2,}\\.png$|data:image/png;base64,)"
    },
    "message": {
      "type": "object",
      "additionalProperties": false,
      "required": [
        "role",
        "content",
        "images"
      ],
      "properties": {
        "role": {
          "enum": [
            "system",
            "user",
            "assistant"
          ]
        },
        "content": {
          "type": "string"
        },
        "images": {
          "type": "array",
          "items": {
            "$ref": "#/$defs/image"
          }
        }
      }
    }
  }
}
)schema";

inline constexpr std::string_view kRolloutRecord = R"schema({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "$id": "goalpose.rollout/1",
  "title": "GRPO rollout record (one JSONL line)",
  "type": "object",
  "additionalProperties": false,
  "required": [
    "schema",
    "id",
    "group_id",
    "task",
    "task_params",
    "seed",
    "sample_index",
    "representation",
    "outcome",
    "reward",
    "advantage",
    "messages"
  ],
  "properties": {
    "schema": {
      "const": "goalpose.rollout/1"
    },
    "id": {
      "type": "string",
      "pattern": "^[A-Za-z0-9_.-]+$"
    },
    "group_id": {
      "type": "string",
      "pattern": "^[A-Za-z0-9_.-]+$"
    },
    "task": {
      "$ref": "#/$defs/task"
    },
    "task_params": {
      "$ref": "#/$defs/task_params"
    },
    "seed": {
      "type": "integer",
      "minimum": 0
    },
    "sample_index": {
      "type": "integer",
      "minimum": 0
    },
    "representation": {
      "enum": [
        "axis",
        "euler"
      ]
    },
    "outcome": {
      "enum": [
        "success",
        "failure",
        "max_rounds",
        "parse_abort"
      ]
    },
    "reward": {
      "enum": [
        0,
        1
      ]
    },
    "advantage": {
      "type": "number"
    },
    "messages": {
      "type": "array",
      "minItems": 1,
      "items": {
        "$ref": "#/$defs/message"
      }
    }
  },
  "$defs": {
    "task": {
      "enum": [
        "lift_can",
        "move_near",
        "stack_cube",
        "put_carrot_on_plate",
        "put_spoon_on_towel",
        "drawer_open",
        "drawer_close"
      ]
    },
    "task_params": {
      "type": "object",
      "additionalProperties": false,
      "required": [
        "lift_height",
        "near_distance",
        "support_gap",
        "footprint_fraction",
        "drawer_open_min",
        "drawer_close_max"
      ],
      "properties": {
        "lift_height": {
          "type": "number"
        },
        "near_distance": {
          "type": "number"
        },
        "support_gap": {
          "type": "number"
        },
        "footprint_fraction": {
          "type": "number"
        },
        "drawer_open_min": {
          "type": "number"
        },
        "drawer_close_max": {
          "type": "number"
        }
      }
    },
    "image": {
      "type": "string",
      "pattern": "^(images/[A-Za-z0-9_.-]+/round_[0-9]{2,}\\.png$|data:image/png;base64,)"
    },
    "message": {
      "type": "object",
      "additionalProperties": false,
      "required": [
        "role",
        "content",
        "images"
      ],
      "properties": {
        "role": {
          "enum": [
            "system",
            "user",
            "assistant"
          ]
        },
        "content": {
          "type": "string"
        },
        "images": {
          "type": "array",
          "items": {
            "$ref": "#/$defs/image"
          }
        }
      }
    }
  }
}
)schema";

inline constexpr std::string_view kManifest = R"schema({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "$id": "goalpose.manifest/1",
  "title": "Dataset or rollout export manifest",
  "type": "object",
  "additionalProperties": false,
  "required": [
    "schema",
    "kind",
    "data",
    "records",
    "skipped",
    "per_task",
    "images",
    "inline_images",
    "sha256"
  ],
  "properties": {
    "schema": {
      "const": "goalpose.manifest/1"
    },
    "kind": {
      "enum": [
        "sft",
        "rollouts"
      ]
    },
    "data": {
      "type": "string",
      "minLength": 1
    },
    "records": {
      "type": "integer",
      "minimum": 0
    },
    "skipped": {
      "type": "integer",
      "minimum": 0
    },
    "per_task": {
      "type": "object",
      "additionalProperties": {
        "type": "integer",
        "minimum": 0
      }
    },
    "groups": {
      "type": "integer",
      "minimum": 0
    },
    "images": {
      "type": "integer",
      "minimum": 0
    },
    "inline_images": {
      "type": "boolean"
    },
    "sha256": {
      "type": "string",
      "pattern": "^[0-9a-f]{64}$"
    }
  }
}
)schema";

inline constexpr std::string_view kLogprobs = R"schema({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "$id": "goalpose.logprobs/1",
  "title": "Per-token log probabilities for one rollout group",
  "type": "object",
  "additionalProperties": false,
  "required": [
    "schema",
    "group_id",
    "samples"
  ],
  "properties": {
    "schema": {
      "const": "goalpose.logprobs/1"
    },
    "group_id": {
      "type": "string",
      "pattern": "^[A-Za-z0-9_.-]+$"
    },
    "samples": {
      "type": "array",
      "minItems": 1,
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": [
          "episode_id",
          "rounds"
        ],
        "properties": {
          "episode_id": {
            "type": "string",
            "pattern": "^[A-Za-z0-9_.-]+$"
          },
          "rounds": {
            "type": "array",
            "items": {
              "type": "object",
              "additionalProperties": false,
              "required": [
                "round",
                "tokens",
                "current",
                "old"
              ],
              "properties": {
                "round": {
                  "type": "integer",
                  "minimum": 1
                },
                "tokens": {
                  "type": "array",
                  "minItems": 1,
                  "items": {
                    "type": "string"
                  }
                },
                "current": {
                  "type": "array",
                  "minItems": 1,
                  "items": {
                    "type": "number",
                    "maximum": 0
                  }
                },
                "old": {
                  "type": "array",
                  "minItems": 1,
                  "items": {
                    "type": "number",
                    "maximum": 0
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}
)schema";

}  // namespace goalpose::schemas

#endif  // GOALPOSE_SCHEMAS_HPP_
