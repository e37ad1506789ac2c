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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace textfuse::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
    char32_t cp = kReplacement;
    std::size_t length = 1; // bytes consumed, >= 1 even when invalid
    bool valid = false;
};

// Decodes one code point starting at byte offset pos (pos < text.size()).
Decoded decode_at(std::string_view text, std::size_t pos);

bool is_valid(std::string_view text);

// Replaces every invalid byte sequence with U+FFFD.
std::string sanitize(std::string_view text);

void append(std::string &out, char32_t cp);

std::size_t count_code_points(std::string_view text);

// Byte length of the first n code points (or the whole string).
std::size_t prefix_bytes(std::string_view text, std::size_t n);

bool is_boundary(std::string_view text, std::size_t pos);

inline bool is_space(char32_t cp) { return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r'; }

} // namespace textfuse::utf8
