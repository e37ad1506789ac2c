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

#include "textfuse/tokenizer.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace textfuse {

enum class SegmentMode { Shortest, Aligned };

std::string_view segment_mode_name(SegmentMode mode);
SegmentMode segment_mode_from_name(std::string_view name);

struct TokenStep {
    TokenId id = 0;
    double nll = 0.0;
    bool eos = false;
};

// Greedy next-token source for one model. nullopt means the stream is exhausted.
class TokenSource {
public:
    virtual ~TokenSource() = default;
    virtual std::optional<TokenStep> next() = 0;
};

// Replays a fixed list of steps; used by tests and by pushback in the segmenter.
class VectorTokenSource final : public TokenSource {
public:
    explicit VectorTokenSource(std::vector<TokenStep> steps) : m_steps(steps.begin(), steps.end()) {}
    std::optional<TokenStep> next() override;
    std::size_t remaining() const noexcept { return m_steps.size(); }

private:
    std::deque<TokenStep> m_steps;
};

// Token steps followed by an end-of-sequence step when eos is given.
std::vector<TokenStep> steps_from_tokens(std::span<const TokenId> tokens, std::optional<TokenId> eos = std::nullopt);

struct Segment {
    std::string text;
    std::string origin_model;
    std::size_t origin_index = 0;
    TokenSeq origin_tokens;          // decode, in the origin context, to text
    std::vector<double> token_nlls;  // generation-time NLL of each origin token
    bool token_budget_hit = false;
    bool eos = false;                // the stream ended with end-of-sequence
    std::vector<TokenStep> lookahead; // steps read past the boundary, not part of text
};

struct SegmenterOptions {
    CodecWindow window{};
    std::size_t token_cap = 32;
};

// Shortest text segment: the first complete word for tokenizers with word
// information (one token of lookahead confirms the word ended), otherwise the
// first token prefix whose decode passes the roundtrip test. context_text is
// the text already in the model's context.
Segment shortest_segment(TokenSource &stream,
                         const Tokenizer &tokenizer,
                         std::string_view context_text,
                         const SegmenterOptions &options = {});

// Aligned text segment: the shortest accumulation of origin shortest segments
// whose end is a decodable segment boundary for every tokenizer in
// all_tokenizers over the generated text. A boundary counts once later text
// cannot retokenize it: it precedes the last whitespace-led word, or the
// stream ended.
Segment aligned_segment(TokenSource &stream,
                        const Tokenizer &origin,
                        std::span<const Tokenizer *const> all_tokenizers,
                        std::string_view context_text,
                        const SegmenterOptions &options = {});

// Byte offsets (into text) at which tokenizer's own shortest segments end when it
// encodes text as a continuation of context_text. Empty when the tokenizer
// cannot encode the text.
std::vector<std::size_t> segment_boundaries(const Tokenizer &tokenizer,
                                            std::string_view context_text,
                                            std::string_view text,
                                            CodecWindow window = {});

} // namespace textfuse
