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

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace textfuse {

// Order-2 token model: the bigram relative frequency interpolated with an
// add-one unigram,
//   p(w | v) = lambda * c(v, w) / c(v) + (1 - lambda) * (c(w) + 1) / (N + V),
// falling back to the unigram term alone when v was never seen as a context.
// Sentences are framed by a start symbol and, when given, end-of-sequence.
class BigramModel {
public:
    BigramModel(std::size_t vocab_size, double lambda);

    void observe(std::span<const TokenId> sentence, std::optional<TokenId> eos);

    // prev == nullopt is the sentence start.
    double probability(std::optional<TokenId> prev, TokenId next) const;

    // Most probable next token; ties go to the lowest id.
    TokenId argmax(std::optional<TokenId> prev) const;

    std::size_t vocab_size() const noexcept { return m_vocab_size; }
    double lambda() const noexcept { return m_lambda; }

private:
    std::size_t context_index(std::optional<TokenId> prev) const;

    std::size_t m_vocab_size;
    double m_lambda;
    std::vector<std::uint64_t> m_unigram;
    std::uint64_t m_unigram_total = 0;
    std::vector<std::unordered_map<TokenId, std::uint64_t>> m_bigram; // [context][next]
    std::vector<std::uint64_t> m_context_total;
};

struct NgramOptions {
    double lambda = 0.9;
    CodecWindow window{};
};

class NgramBackend final : public Backend {
public:
    // Each corpus line is one training sentence encoded with the tokenizer.
    NgramBackend(std::string model_id, TokenizerPtr tokenizer, std::span<const std::string> corpus_lines,
                 NgramOptions options = {});

    SessionPtr open_session(std::string_view prompt) const override;

    const BigramModel &model() const noexcept { return *m_model; }

private:
    std::shared_ptr<const BigramModel> m_model;
    NgramOptions m_options;
};

} // namespace textfuse
