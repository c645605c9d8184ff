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

#ifndef GOALPOSE_JSONSCHEMA_HPP_
#define GOALPOSE_JSONSCHEMA_HPP_

// A small JSON Schema checker covering the keywords the published record
// schemas use: type, enum, const, properties, required,
// additionalProperties, items, minItems, maxItems, minLength, pattern,
// minimum, maximum, anyOf, and local $ref into $defs. Anything else in a
// schema is rejected up front so a schema edit cannot silently weaken
// validation.

#include <regex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "goalpose/error.hpp"

namespace goalpose {

class JsonSchema {
 public:
  explicit JsonSchema(nlohmann::json schema) : root_(std::move(schema)) { check_keywords(root_, "#"); }

  // Empty when valid; otherwise one message per violation, "<pointer>: what".
  std::vector<std::string> errors(const nlohmann::json& doc) const {
    std::vector<std::string> out;
    visit(root_, doc, "", out);
    return out;
  }

  bool valid(const nlohmann::json& doc) const { return errors(doc).empty(); }

  // Throws SchemaViolation with the first violation.
  void require(const nlohmann::json& doc, const std::string& where = {}) const {
    const auto errs = errors(doc);
    if (!errs.empty()) {
      throw Error(Errc::kSchemaViolation,
                  (where.empty() ? "" : where + ": ") + errs.front());
    }
  }

 private:
  static const std::set<std::string>& known_keywords() {
    static const std::set<std::string> k = {
        "$schema", "$id", "$defs", "$ref", "title", "description", "type", "enum", "const",
        "properties", "required", "additionalProperties", "items", "minItems", "maxItems",
        "minLength", "pattern", "minimum", "maximum", "anyOf"};
    return k;
  }

  void check_keywords(const nlohmann::json& s, const std::string& at) {
    if (s.is_boolean()) return;
    if (!s.is_object()) throw Error(Errc::kSchemaViolation, at + ": schema must be an object");
    for (const auto& [key, value] : s.items()) {
      if (!known_keywords().count(key)) {
        throw Error(Errc::kSchemaViolation, fmt::format("{}: unsupported keyword '{}'", at, key));
      }
      if (key == "pattern") patterns_.emplace(value.get<std::string>(),
                                              std::regex(value.get<std::string>(),
                                                         std::regex::ECMAScript));
    }
    if (s.contains("properties")) {
      for (const auto& [k, v] : s["properties"].items()) check_keywords(v, at + "/properties/" + k);
    }
    if (s.contains("$defs")) {
      for (const auto& [k, v] : s["$defs"].items()) check_keywords(v, at + "/$defs/" + k);
    }
    if (s.contains("items")) check_keywords(s["items"], at + "/items");
    if (s.contains("additionalProperties")) {
      check_keywords(s["additionalProperties"], at + "/additionalProperties");
    }
    if (s.contains("anyOf")) {
      for (std::size_t i = 0; i < s["anyOf"].size(); ++i) {
        check_keywords(s["anyOf"][i], fmt::format("{}/anyOf/{}", at, i));
      }
    }
  }

  const nlohmann::json& resolve(const std::string& ref) const {
    static const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw Error(Errc::kSchemaViolation, "unsupported $ref " + ref);
    const auto& defs = root_.at("$defs");
    const std::string name = ref.substr(prefix.size());
    if (!defs.contains(name)) throw Error(Errc::kSchemaViolation, "dangling $ref " + ref);
    return defs.at(name);
  }

  static bool has_type(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") {
      if (v.is_number_integer()) return true;
      return v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>()));
    }
    return false;
  }

  // Counts code points; schema lengths are in characters, not bytes.
  static std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  }

  void visit(const nlohmann::json& s, const nlohmann::json& v, const std::string& ptr,
             std::vector<std::string>& out) const {
    const std::string at = ptr.empty() ? "/" : ptr;
    if (s.is_boolean()) {
      if (!s.get<bool>()) out.push_back(at + ": not allowed");
      return;
    }
    if (s.contains("$ref")) {
      visit(resolve(s["$ref"].get<std::string>()), v, ptr, out);
    }
    if (s.contains("type")) {
      const auto& t = s["type"];
      bool ok = false;
      if (t.is_string()) {
        ok = has_type(v, t.get<std::string>());
      } else {
        for (const auto& x : t) ok = ok || has_type(v, x.get<std::string>());
      }
      if (!ok) {
        out.push_back(fmt::format("{}: expected type {}", at, t.dump()));
        return;
      }
    }
    if (s.contains("enum")) {
      bool hit = false;
      for (const auto& e : s["enum"]) hit = hit || e == v;
      if (!hit) out.push_back(fmt::format("{}: {} not in {}", at, v.dump(), s["enum"].dump()));
    }
    if (s.contains("const") && s["const"] != v) {
      out.push_back(fmt::format("{}: expected {}", at, s["const"].dump()));
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>()) {
        out.push_back(fmt::format("{}: {} below minimum {}", at, v.dump(), s["minimum"].dump()));
      }
      if (s.contains("maximum") && x > s["maximum"].get<double>()) {
        out.push_back(fmt::format("{}: {} above maximum {}", at, v.dump(), s["maximum"].dump()));
      }
    }
    if (v.is_string()) {
      const auto& str = v.get_ref<const std::string&>();
      if (s.contains("minLength") && utf8_length(str) < s["minLength"].get<std::size_t>()) {
        out.push_back(at + ": string too short");
      }
      if (s.contains("pattern")) {
        const auto& re = patterns_.at(s["pattern"].get<std::string>());
        if (!std::regex_search(str, re)) {
          out.push_back(fmt::format("{}: does not match {}", at, s["pattern"].get<std::string>()));
        }
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
        out.push_back(fmt::format("{}: fewer than {} items", at, s["minItems"].dump()));
      }
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
        out.push_back(fmt::format("{}: more than {} items", at, s["maxItems"].dump()));
      }
      if (s.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          visit(s["items"], v[i], fmt::format("{}/{}", ptr, i), out);
        }
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& k : s["required"]) {
          if (!v.contains(k.get<std::string>())) {
            out.push_back(fmt::format("{}: missing required '{}'", at, k.get<std::string>()));
          }
        }
      }
      const nlohmann::json* props = s.contains("properties") ? &s["properties"] : nullptr;
      for (const auto& [k, child] : v.items()) {
        const std::string cp = ptr + "/" + k;
        if (props && props->contains(k)) {
          visit((*props)[k], child, cp, out);
        } else if (s.contains("additionalProperties")) {
          const auto& ap = s["additionalProperties"];
          if (ap.is_boolean() && !ap.get<bool>()) {
            out.push_back(fmt::format("{}: unexpected property '{}'", at, k));
          } else {
            visit(ap, child, cp, out);
          }
        }
      }
    }
    if (s.contains("anyOf")) {
      bool any = false;
      for (const auto& alt : s["anyOf"]) {
        std::vector<std::string> sub;
        visit(alt, v, ptr, sub);
        if (sub.empty()) {
          any = true;
          break;
        }
      }
      if (!any) out.push_back(at + ": matches no alternative");
    }
  }

  nlohmann::json root_;
  std::unordered_map<std::string, std::regex> patterns_;
};

}  // namespace goalpose

#endif  // GOALPOSE_JSONSCHEMA_HPP_
