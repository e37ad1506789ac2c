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

#include "textfuse/scripted.hpp"

#include "textfuse/error.hpp"

#include <json.hpp>

#include <deque>

namespace textfuse {

Script script_from_json(std::string_view json_text) {
    Script script;
    try {
        const auto j = nlohmann::json::parse(json_text);
        if (j.contains("rules")) {
            script.rules = j.at("rules").get<std::map<std::string, std::string>>();
        }
        if (j.contains("nll")) {
            script.nll = j.at("nll").get<std::map<std::string, double>>();
        }
        script.default_nll = j.value("default_nll", script.default_nll);
        script.eos_nll = j.value("eos_nll", script.eos_nll);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ConfigError, std::string("script: ") + e.what());
    }
    return script;
}

namespace {

std::string trimmed_last_word(std::string_view text) {
    const auto words = split_words(text);
    if (words.empty()) {
        return {};
    }
    std::string_view w = words.back();
    while (!w.empty() && (w.front() == ' ' || w.front() == '\n' || w.front() == '\t' || w.front() == '\r')) {
        w.remove_prefix(1);
    }
    while (!w.empty() && (w.back() == ' ' || w.back() == '\n' || w.back() == '\t' || w.back() == '\r')) {
        w.remove_suffix(1);
    }
    return std::string(w);
}

class ScriptedSession final : public LocalSession {
public:
    ScriptedSession(std::string model_id, TokenizerPtr tokenizer, CodecWindow window,
                    std::shared_ptr<const Script> script)
        : LocalSession(std::move(model_id), std::move(tokenizer), window), m_script(std::move(script)) {}

    SessionPtr fork() const override { return std::unique_ptr<ScriptedSession>(new ScriptedSession(*this)); }

protected:
    TokenStep predict() override {
        if (m_pending.empty()) {
            const std::string text = running_text();
            auto rule = m_script->rules.find(trimmed_last_word(text));
            if (rule == m_script->rules.end()) {
                rule = m_script->rules.find("*");
            }
            if (rule == m_script->rules.end() || rule->second.empty()) {
                return {tokenizer().eos_id().value_or(-1), m_script->eos_nll, true};
            }
            const ContextCodec codec(tokenizer(), text, window());
            const TokenSeq tokens = codec.encode(rule->second);
            m_pending.assign(tokens.begin(), tokens.end());
        }
        const TokenId id = m_pending.front();
        m_pending.pop_front();
        return {id, token_nll(tokens_view(), running_text(), id), false};
    }

    double token_nll(std::span<const TokenId>, std::string_view running_text, TokenId next) const override {
        const std::string surface(tokenizer().token_text(next));
        if (auto it = m_script->nll.find(trimmed_last_word(running_text) + "|" + surface); it != m_script->nll.end()) {
            return it->second;
        }
        if (auto it = m_script->nll.find(surface); it != m_script->nll.end()) {
            return it->second;
        }
        return m_script->default_nll;
    }

    void on_append() override { m_pending.clear(); }

private:
    ScriptedSession(const ScriptedSession &other) = default;

    std::shared_ptr<const Script> m_script;
    std::deque<TokenId> m_pending;
};

} // namespace

ScriptedBackend::ScriptedBackend(std::string model_id, TokenizerPtr tokenizer, Script script, CodecWindow window)
    : Backend({std::move(model_id), std::move(tokenizer), BackendKind::MockScripted}),
      m_script(std::make_shared<const Script>(std::move(script))), m_window(window) {
    if (!this->tokenizer().eos_id()) {
        throw Error(ErrorCode::ConfigError, "scripted backend '" + this->model_id() + "' needs a tokenizer with eos");
    }
}

SessionPtr ScriptedBackend::open_session(std::string_view prompt) const {
    auto session = std::make_unique<ScriptedSession>(model_id(), descriptor().tokenizer, m_window, m_script);
    session->reset(prompt);
    return session;
}

} // namespace textfuse
