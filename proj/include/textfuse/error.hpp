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

#include <stdexcept>
#include <string>
#include <string_view>

namespace textfuse {

enum class ErrorCode {
    EncodingFailure,
    WindowMismatch,
    UnsupportedCategory,
    StreamEnded,
    EmptySegment,
    DisqualifiedSegment,
    NoQualifiedCandidate,
    SessionFinished,
    UnknownSession,
    BackendUnavailable,
    ConfigError,
    InvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Parses the wire name produced by error_code_name. Unknown names map to InvalidArgument.
ErrorCode error_code_from_name(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

} // namespace textfuse
