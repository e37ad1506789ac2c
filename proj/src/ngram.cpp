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

#include "textfuse/ngram.hpp"

#include "textfuse/error.hpp"

#include <cmath>

namespace textfuse {

BigramModel::BigramModel(std::size_t vocab_size, double lambda)
    : m_vocab_size(vocab_size), m_lambda(lambda), m_unigram(vocab_size, 0), m_bigram(vocab_size + 1),
      m_context_total(vocab_size + 1, 0) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw Error(ErrorCode::ConfigError, "interpolation weight must lie in [0, 1]");
    }
}

std::size_t BigramModel::context_index(std::optional<TokenId> prev) const {
    if (!prev) {
        return m_vocab_size;
    }
    if (*prev < 0 || static_cast<std::size_t>(*prev) >= m_vocab_size) {
        throw Error(ErrorCode::InvalidArgument, "token id outside the model vocabulary");
    }
    return static_cast<std::size_t>(*prev);
}

void BigramModel::observe(std::span<const TokenId> sentence, std::optional<TokenId> eos) {
    std::optional<TokenId> prev;
    const auto count = [&](TokenId next) {
        const std::size_t ctx = context_index(prev);
        ++m_bigram[ctx][next];
        ++m_context_total[ctx];
        ++m_unigram[context_index(next)];
        ++m_unigram_total;
        prev = next;
    };
    for (TokenId id : sentence) {
        count(id);
    }
    if (eos) {
        count(*eos);
    }
}

double BigramModel::probability(std::optional<TokenId> prev, TokenId next) const {
    const std::size_t w = context_index(next);
    const double unigram = (static_cast<double>(m_unigram[w]) + 1.0) /
                           (static_cast<double>(m_unigram_total) + static_cast<double>(m_vocab_size));
    const std::size_t ctx = context_index(prev);
    if (m_context_total[ctx] == 0) {
        return unigram;
    }
    const auto &row = m_bigram[ctx];
    const auto it = row.find(next);
    const double pair = it == row.end() ? 0.0 : static_cast<double>(it->second);
    return m_lambda * pair / static_cast<double>(m_context_total[ctx]) + (1.0 - m_lambda) * unigram;
}

TokenId BigramModel::argmax(std::optional<TokenId> prev) const {
    TokenId best = 0;
    double best_p = -1.0;
    for (std::size_t w = 0; w < m_vocab_size; ++w) {
        const double p = probability(prev, static_cast<TokenId>(w));
        if (p > best_p) {
            best_p = p;
            best = static_cast<TokenId>(w);
        }
    }
    return best;
}

namespace {

class NgramSession final : public LocalSession {
public:
    NgramSession(std::string model_id, TokenizerPtr tokenizer, CodecWindow window,
                 std::shared_ptr<const BigramModel> model)
        : LocalSession(std::move(model_id), std::move(tokenizer), window), m_model(std::move(model)) {}

    SessionPtr fork() const override { return std::unique_ptr<NgramSession>(new NgramSession(*this)); }

protected:
    TokenStep predict() override {
        const auto ctx = tokens_view();
        const std::optional<TokenId> prev = ctx.empty() ? std::nullopt : std::optional<TokenId>(ctx.back());
        const TokenId id = m_model->argmax(prev);
        const double nll = -std::log(m_model->probability(prev, id));
        return {id, nll, tokenizer().eos_id() == id};
    }

    double token_nll(std::span<const TokenId> context, std::string_view, TokenId next) const override {
        const std::optional<TokenId> prev =
            context.empty() ? std::nullopt : std::optional<TokenId>(context.back());
        return -std::log(m_model->probability(prev, next));
    }

private:
    NgramSession(const NgramSession &other) = default;

    std::shared_ptr<const BigramModel> m_model;
};

} // namespace

NgramBackend::NgramBackend(std::string model_id, TokenizerPtr tokenizer, std::span<const std::string> corpus_lines,
                           NgramOptions options)
    : Backend({std::move(model_id), std::move(tokenizer), BackendKind::MockNgram}), m_options(options) {
    auto model = std::make_shared<BigramModel>(this->tokenizer().vocab_size(), options.lambda);
    for (std::size_t i = 0; i < corpus_lines.size(); ++i) {
        TokenSeq tokens;
        try {
            tokens = this->tokenizer().encode(corpus_lines[i]);
        } catch (const Error &e) {
            throw Error(ErrorCode::ConfigError, "corpus line " + std::to_string(i + 1) + " of '" +
                                                    this->model_id() + "': " + e.what());
        }
        model->observe(tokens, this->tokenizer().eos_id());
    }
    m_model = std::move(model);
}

SessionPtr NgramBackend::open_session(std::string_view prompt) const {
    auto session =
        std::make_unique<NgramSession>(model_id(), descriptor().tokenizer, m_options.window, m_model);
    session->reset(prompt);
    return session;
}

} // namespace textfuse
