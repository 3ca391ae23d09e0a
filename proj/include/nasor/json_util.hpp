// Copyright 2026 The Nasor Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NASOR_JSON_UTIL_HPP_
#define NASOR_JSON_UTIL_HPP_

#include <cstdint>
#include <string>

#include <json.hpp>

#include "nasor/errors.hpp"

namespace nasor {
namespace jsonutil {

inline const nlohmann::json& require(const nlohmann::json& j,
                                     const std::string& field) {
  if (!j.is_object() || !j.contains(field)) {
    throw Error(Errc::parse, "missing field `" + field + "`");
  }
  return j.at(field);
}

inline std::string require_string(const nlohmann::json& j,
                                  const std::string& field) {
  const auto& v = require(j, field);
  if (!v.is_string()) {
    throw Error(Errc::parse, "field `" + field + "` must be a string");
  }
  return v.get<std::string>();
}

inline double require_number(const nlohmann::json& j,
                             const std::string& field) {
  const auto& v = require(j, field);
  if (!v.is_number()) {
    throw Error(Errc::parse, "field `" + field + "` must be a number");
  }
  return v.get<double>();
}

inline std::uint32_t require_uint(const nlohmann::json& j,
                                  const std::string& field) {
  const auto& v = require(j, field);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(Errc::parse,
                "field `" + field + "` must be a non-negative integer");
  }
  std::uint64_t n = v.get<std::uint64_t>();
  if (n > 0xffffffffULL) {
    throw Error(Errc::parse, "field `" + field + "` is out of range");
  }
  return static_cast<std::uint32_t>(n);
}

inline std::int64_t require_int64(const nlohmann::json& j,
                                  const std::string& field) {
  const auto& v = require(j, field);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw Error(Errc::parse, "field `" + field + "` must be an integer");
  }
  return v.get<std::int64_t>();
}

inline const nlohmann::json& require_array(const nlohmann::json& j,
                                           const std::string& field) {
  const auto& v = require(j, field);
  if (!v.is_array()) {
    throw Error(Errc::parse, "field `" + field + "` must be an array");
  }
  return v;
}

inline nlohmann::json parse_text(std::string_view text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(Errc::parse, "malformed JSON document");
  }
  return doc;
}

}  // namespace jsonutil
}  // namespace nasor

#endif  // NASOR_JSON_UTIL_HPP_
