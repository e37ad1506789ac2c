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

#include "textfuse/error.hpp"

#include <array>
#include <utility>

namespace textfuse {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 12> kNames{{
    {ErrorCode::EncodingFailure, "EncodingFailure"},
    {ErrorCode::WindowMismatch, "WindowMismatch"},
    {ErrorCode::UnsupportedCategory, "UnsupportedCategory"},
    {ErrorCode::StreamEnded, "StreamEnded"},
    {ErrorCode::EmptySegment, "EmptySegment"},
    {ErrorCode::DisqualifiedSegment, "DisqualifiedSegment"},
    {ErrorCode::NoQualifiedCandidate, "NoQualifiedCandidate"},
    {ErrorCode::SessionFinished, "SessionFinished"},
    {ErrorCode::UnknownSession, "UnknownSession"},
    {ErrorCode::BackendUnavailable, "BackendUnavailable"},
    {ErrorCode::ConfigError, "ConfigError"},
    {ErrorCode::InvalidArgument, "InvalidArgument"},
}};

} // namespace

std::string_view error_code_name(ErrorCode code) {
    for (const auto &[c, name] : kNames) {
        if (c == code) {
            return name;
        }
    }
    return "Unknown";
}

ErrorCode error_code_from_name(std::string_view name) {
    for (const auto &[c, n] : kNames) {
        if (n == name) {
            return c;
        }
    }
    return ErrorCode::InvalidArgument;
}

} // namespace textfuse
