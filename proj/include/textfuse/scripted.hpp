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

#include "textfuse/backend.hpp"

#include <map>
#include <string>

namespace textfuse {

// Deterministic emitter for golden tests. Generation looks up the last word of
// the context (surrounding whitespace trimmed) in `rules` and emits the tokens
// of the mapped phrase, then looks up again; with no rule (and no "*" rule) it
// emits end-of-sequence. Every token's NLL comes from `nll`, keyed first by
// "<last word>|<token text>", then by "<token text>", else default_nll.
struct Script {
    std::map<std::string, std::string> rules;
    std::map<std::string, double> nll;
    double default_nll = 5.0;
    double eos_nll = 0.1;
};

// Parses { "rules": {...}, "nll": {...}, "default_nll": x, "eos_nll": y }.
Script script_from_json(std::string_view json_text);

class ScriptedBackend final : public Backend {
public:
    ScriptedBackend(std::string model_id, TokenizerPtr tokenizer, Script script, CodecWindow window = {});

    SessionPtr open_session(std::string_view prompt) const override;

    const Script &script() const noexcept { return *m_script; }

private:
    std::shared_ptr<const Script> m_script;
    CodecWindow m_window;
};

} // namespace textfuse
