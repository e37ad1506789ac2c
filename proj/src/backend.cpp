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

#include "textfuse/backend.hpp"

#include "textfuse/error.hpp"

#include <algorithm>
#include <atomic>

namespace textfuse {

std::string_view backend_kind_name(BackendKind kind) {
    switch (kind) {
    case BackendKind::MockNgram:
        return "ngram";
    case BackendKind::MockScripted:
        return "scripted";
    case BackendKind::Remote:
        return "remote";
    }
    return "ngram";
}

std::string next_session_id(std::string_view prefix) {
    static std::atomic<std::uint64_t> counter{0};
    return std::string(prefix) + "-" + std::to_string(++counter);
}

std::optional<TokenStep> SessionTokenSource::next() {
    if (m_session.finished()) {
        return std::nullopt;
    }
    return m_session.next_token();
}

Backend::Backend(BackendDescriptor descriptor) : m_descriptor(std::move(descriptor)) {
    if (!m_descriptor.tokenizer) {
        throw Error(ErrorCode::ConfigError, "backend '" + m_descriptor.model_id + "' has no tokenizer");
    }
}

LocalSession::LocalSession(std::string model_id, TokenizerPtr tokenizer, CodecWindow window)
    : m_session_id(next_session_id(model_id)), m_model_id(std::move(model_id)), m_tokenizer(std::move(tokenizer)),
      m_window(window) {}

LocalSession::LocalSession(const LocalSession &other)
    : Session(), m_session_id(next_session_id(other.m_model_id)), m_model_id(other.m_model_id),
      m_tokenizer(other.m_tokenizer), m_window(other.m_window), m_tokens(other.m_tokens), m_text(other.m_text),
      m_undecoded(other.m_undecoded), m_finished(other.m_finished) {}

void LocalSession::reset(std::string_view prompt) {
    m_tokens = m_tokenizer->encode(prompt);
    m_text = std::string(prompt);
    m_undecoded.clear();
    m_finished = false;
}

std::string LocalSession::running_text() const {
    std::string text = m_text;
    for (TokenId id : m_undecoded) {
        text += m_tokenizer->token_text(id);
    }
    return text;
}

TokenStep LocalSession::next_token() {
    if (m_finished) {
        throw Error(ErrorCode::SessionFinished, "session " + m_session_id + " already produced end-of-sequence");
    }
    TokenStep step = predict();
    if (step.eos) {
        m_finished = true;
        return step;
    }
    m_tokens.push_back(step.id);
    m_undecoded.push_back(step.id);
    const ContextCodec codec(*m_tokenizer, m_text, m_window);
    if (auto text = codec.decode(m_undecoded)) {
        m_text += *text;
        m_undecoded.clear();
    }
    return step;
}

LocalSession::Encoded LocalSession::encode_continuation(std::string_view text) const {
    if (m_undecoded.empty()) {
        try {
            const ContextCodec codec(*m_tokenizer, m_text, m_window);
            return {m_tokens, codec.encode(text)};
        } catch (const Error &e) {
            if (e.code() != ErrorCode::WindowMismatch) {
                throw;
            }
        }
    }
    // The text merges with the end of the context: retokenize everything and
    // condition on the longest unchanged token prefix.
    TokenSeq full = m_tokenizer->encode(m_text + std::string(text));
    const auto mismatch = std::mismatch(full.begin(), full.end(), m_tokens.begin(), m_tokens.end());
    const auto common = static_cast<std::size_t>(mismatch.first - full.begin());
    return {TokenSeq(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(common)),
            TokenSeq(full.begin() + static_cast<std::ptrdiff_t>(common), full.end())};
}

TextScore LocalSession::score_text(std::string_view text) const {
    if (text.empty()) {
        throw Error(ErrorCode::EmptySegment, "cannot score empty text");
    }
    Encoded enc = encode_continuation(text);
    TextScore score;
    std::string running = running_text();
    TokenSeq context = std::move(enc.prefix);
    for (TokenId id : enc.tokens) {
        score.nll_sum += token_nll(context, running, id);
        context.push_back(id);
        running += m_tokenizer->token_text(id);
    }
    score.token_count = enc.tokens.size();
    return score;
}

void LocalSession::append_text(std::string_view text) {
    if (m_finished) {
        throw Error(ErrorCode::SessionFinished, "session " + m_session_id + " already produced end-of-sequence");
    }
    if (text.empty()) {
        return;
    }
    Encoded enc = encode_continuation(text);
    m_tokens = std::move(enc.prefix);
    m_tokens.insert(m_tokens.end(), enc.tokens.begin(), enc.tokens.end());
    m_text += text;
    m_undecoded.clear();
    on_append();
}

} // namespace textfuse
