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

#include "textfuse/segmenter.hpp"
#include "textfuse/tokenizer.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace textfuse {

enum class BackendKind { MockNgram, MockScripted, Remote };

std::string_view backend_kind_name(BackendKind kind);

struct BackendDescriptor {
    std::string model_id;
    TokenizerPtr tokenizer;
    BackendKind kind = BackendKind::MockNgram;
};

struct TextScore {
    double nll_sum = 0.0;
    std::size_t token_count = 0;
};

// One model's generation state. A session is single-writer; distinct sessions
// (forks included) may be driven from different threads.
class Session {
public:
    virtual ~Session() = default;

    virtual const std::string &session_id() const = 0;
    virtual const std::string &model_id() const = 0;
    virtual bool finished() const = 0;
    virtual TokenSeq context_tokens() const = 0;
    virtual std::string context_text() const = 0;

    // Greedy next token; extends the context. Throws Error(SessionFinished)
    // after end-of-sequence.
    virtual TokenStep next_token() = 0;

    // Independent session with identical context.
    virtual std::unique_ptr<Session> fork() const = 0;

    // NLL sum and token count of text conditioned on the context; the context
    // is not advanced. Throws Error(EmptySegment) for "" and
    // Error(EncodingFailure) for text the tokenizer cannot represent.
    virtual TextScore score_text(std::string_view text) const = 0;

    virtual void append_text(std::string_view text) = 0;
};

using SessionPtr = std::unique_ptr<Session>;

// Adapts a session to the segmenter's token source; ends when the session finishes.
class SessionTokenSource final : public TokenSource {
public:
    explicit SessionTokenSource(Session &session) : m_session(session) {}
    std::optional<TokenStep> next() override;

private:
    Session &m_session;
};

class Backend {
public:
    explicit Backend(BackendDescriptor descriptor);
    virtual ~Backend() = default;

    const BackendDescriptor &descriptor() const noexcept { return m_descriptor; }
    const std::string &model_id() const noexcept { return m_descriptor.model_id; }
    const Tokenizer &tokenizer() const noexcept { return *m_descriptor.tokenizer; }

    virtual SessionPtr open_session(std::string_view prompt) const = 0;

private:
    BackendDescriptor m_descriptor;
};

using BackendPtr = std::shared_ptr<const Backend>;

// Shared machinery of in-process mock sessions: context bookkeeping, in-context
// encoding with a codec window, and scoring by per-token NLL.
class LocalSession : public Session {
public:
    LocalSession(std::string model_id, TokenizerPtr tokenizer, CodecWindow window);

    const std::string &session_id() const override { return m_session_id; }
    const std::string &model_id() const override { return m_model_id; }
    bool finished() const override { return m_finished; }
    TokenSeq context_tokens() const override { return m_tokens; }
    std::string context_text() const override { return m_text; }

    TokenStep next_token() override;
    TextScore score_text(std::string_view text) const override;
    void append_text(std::string_view text) override;

    // Opens the context on a prompt; throws Error(EncodingFailure).
    void reset(std::string_view prompt);

protected:
    LocalSession(const LocalSession &other);

    const Tokenizer &tokenizer() const { return *m_tokenizer; }
    const TokenizerPtr &tokenizer_ptr() const { return m_tokenizer; }
    CodecWindow window() const { return m_window; }
    std::span<const TokenId> tokens_view() const { return m_tokens; }

    // Context text plus the surfaces of generated tokens that do not decode yet.
    std::string running_text() const;

    // Greedy choice for the current context.
    virtual TokenStep predict() = 0;

    // -ln p(next | context). running_text is the context text followed by the
    // surfaces of any tokens scored so far.
    virtual double token_nll(std::span<const TokenId> context, std::string_view running_text, TokenId next) const = 0;

    // Called whenever text is appended from outside.
    virtual void on_append() {}

private:
    struct Encoded {
        TokenSeq prefix; // context the new tokens are conditioned on
        TokenSeq tokens;
    };
    Encoded encode_continuation(std::string_view text) const;

    std::string m_session_id;
    std::string m_model_id;
    TokenizerPtr m_tokenizer;
    CodecWindow m_window;
    TokenSeq m_tokens;
    std::string m_text;
    TokenSeq m_undecoded; // generated tokens not yet forming decodable text
    bool m_finished = false;
};

std::string next_session_id(std::string_view prefix);

} // namespace textfuse
