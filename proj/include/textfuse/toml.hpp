// Copyright 2026 The textfuse Authors
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

#pragma once

#include <json.hpp>

#include <string_view>

namespace textfuse {

// Parses the configuration subset of TOML into a JSON object: [table] and
// [[array-of-tables]] headers, bare or quoted keys, basic/literal/multi-line
// strings, integers, floats, booleans and (multi-line) arrays. Dotted keys,
// inline tables and dates are rejected. Throws Error(ConfigError) with the
// offending line number.
nlohmann::json parse_toml(std::string_view text);

} // namespace textfuse
