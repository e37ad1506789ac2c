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

#include "textfuse/segmenter.hpp"

#include "textfuse/error.hpp"

#include <algorithm>
#include <set>

namespace textfuse {

std::string_view segment_mode_name(SegmentMode mode) {
    return mode == SegmentMode::Shortest ? "shortest" : "aligned";
}

SegmentMode segment_mode_from_name(std::string_view name) {
    if (name == "shortest") {
        return SegmentMode::Shortest;
    }
    if (name == "aligned") {
        return SegmentMode::Aligned;
    }
    throw Error(ErrorCode::ConfigError, "unknown segment mode '" + std::string(name) + "'");
}

std::optional<TokenStep> VectorTokenSource::next() {
    if (m_steps.empty()) {
        return std::nullopt;
    }
    TokenStep step = m_steps.front();
    m_steps.pop_front();
    return step;
}

std::vector<TokenStep> steps_from_tokens(std::span<const TokenId> tokens, std::optional<TokenId> eos) {
    std::vector<TokenStep> steps;
    steps.reserve(tokens.size() + 1);
    for (TokenId id : tokens) {
        steps.push_back({id, 0.0, false});
    }
    if (eos) {
        steps.push_back({*eos, 0.0, true});
    }
    return steps;
}

namespace {

class Cursor {
public:
    explicit Cursor(TokenSource &source) : m_source(source) {}

    std::optional<TokenStep> next() {
        if (!m_pending.empty()) {
            TokenStep step = m_pending.front();
            m_pending.pop_front();
            return step;
        }
        return m_source.next();
    }

    void push_back_front(std::span<const TokenStep> steps) {
        m_pending.insert(m_pending.begin(), steps.begin(), steps.end());
    }

    std::vector<TokenStep> drain() {
        std::vector<TokenStep> out(m_pending.begin(), m_pending.end());
        m_pending.clear();
        return out;
    }

private:
    TokenSource &m_source;
    std::deque<TokenStep> m_pending;
};

Segment read_shortest(Cursor &cursor, const Tokenizer &tokenizer, std::string_view context_text,
                      const SegmenterOptions &options) {
    const ContextCodec codec(tokenizer, context_text, options.window);
    const bool has_words = tokenizer.category() != TokenizerCategory::Opaque;
    TokenSeq buffer;
    std::vector<double> nlls;
    Segment segment;

    const auto finish = [&](std::size_t n, std::string text) {
        segment.text = std::move(text);
        segment.origin_tokens.assign(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(n));
        segment.token_nlls.assign(nlls.begin(), nlls.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t i = n; i < buffer.size(); ++i) {
            segment.lookahead.push_back({buffer[i], nlls[i], false});
        }
        return segment;
    };

    while (true) {
        auto step = cursor.next();
        if (!step) {
            auto [n, text] = codec.longest_decodable_prefix(buffer);
            if (n == 0) {
                throw Error(ErrorCode::StreamEnded, "token stream exhausted without a decodable prefix");
            }
            return finish(n, std::move(text));
        }
        if (step->eos) {
            segment.eos = true;
            auto [n, text] = codec.longest_decodable_prefix(buffer);
            return finish(n, std::move(text));
        }
        buffer.push_back(step->id);
        nlls.push_back(step->nll);

        if (auto text = codec.decode(buffer)) {
            if (!has_words) {
                return finish(buffer.size(), std::move(*text));
            }
            const auto words = tokenizer.word_boundaries(buffer);
            if (words.size() >= 2) {
                const std::size_t n = words.front().last_token + 1;
                if (auto first = codec.decode(std::span<const TokenId>(buffer).first(n))) {
                    return finish(n, std::move(*first));
                }
            }
        }
        if (buffer.size() >= options.token_cap) {
            segment.token_budget_hit = true;
            auto [n, text] = codec.longest_decodable_prefix(buffer);
            if (n == 0) {
                return finish(buffer.size(), tokenizer.decode_raw(buffer));
            }
            return finish(n, std::move(text));
        }
    }
}

std::vector<TokenStep> part_steps(const Segment &part, const Tokenizer &origin) {
    std::vector<TokenStep> steps;
    for (std::size_t i = 0; i < part.origin_tokens.size(); ++i) {
        steps.push_back({part.origin_tokens[i], part.token_nlls[i], false});
    }
    if (part.eos) {
        steps.push_back({origin.eos_id().value_or(-1), 0.0, true});
    }
    return steps;
}

} // namespace

Segment shortest_segment(TokenSource &stream, const Tokenizer &tokenizer, std::string_view context_text,
                         const SegmenterOptions &options) {
    Cursor cursor(stream);
    return read_shortest(cursor, tokenizer, context_text, options);
}

namespace {

// Byte offset where the last whitespace-led word of text begins.
std::size_t last_word_start(std::string_view text) {
    const auto words = split_words(text);
    std::size_t offset = text.size();
    if (!words.empty()) {
        offset -= words.back().size();
    }
    return offset;
}

} // namespace

std::vector<std::size_t> segment_boundaries(const Tokenizer &tokenizer, std::string_view context_text,
                                            std::string_view text, CodecWindow window) {
    std::optional<ContextCodec> codec;
    TokenSeq tokens;
    try {
        codec.emplace(tokenizer, context_text, window);
        tokens = codec->encode(text);
    } catch (const Error &e) {
        if (e.code() == ErrorCode::EncodingFailure || e.code() == ErrorCode::WindowMismatch) {
            return {};
        }
        throw;
    }

    std::vector<std::size_t> prefix_lengths;
    if (tokenizer.category() == TokenizerCategory::Opaque) {
        for (std::size_t n = 1; n <= tokens.size(); ++n) {
            prefix_lengths.push_back(n);
        }
    } else {
        for (const auto &word : tokenizer.word_boundaries(tokens)) {
            prefix_lengths.push_back(word.last_token + 1);
        }
    }

    std::set<std::size_t> out;
    const std::span<const TokenId> all(tokens);
    for (std::size_t n : prefix_lengths) {
        auto decoded = codec->decode(all.first(n));
        if (decoded && !decoded->empty() && text.starts_with(*decoded)) {
            out.insert(decoded->size());
        }
    }
    return {out.begin(), out.end()};
}

Segment aligned_segment(TokenSource &stream, const Tokenizer &origin, std::span<const Tokenizer *const> all_tokenizers,
                        std::string_view context_text, const SegmenterOptions &options) {
    Cursor cursor(stream);
    std::vector<Segment> parts;
    std::string generated;
    std::size_t consumed = 0;

    // Parts [0, count) become the segment; the rest is reported as lookahead.
    const auto merge = [&](std::size_t count) {
        Segment out;
        for (std::size_t i = 0; i < count; ++i) {
            out.text += parts[i].text;
            out.origin_tokens.insert(out.origin_tokens.end(), parts[i].origin_tokens.begin(),
                                     parts[i].origin_tokens.end());
            out.token_nlls.insert(out.token_nlls.end(), parts[i].token_nlls.begin(), parts[i].token_nlls.end());
        }
        out.eos = parts[count - 1].eos;
        out.token_budget_hit = parts[count - 1].token_budget_hit;
        for (std::size_t i = count; i < parts.size(); ++i) {
            auto steps = part_steps(parts[i], origin);
            out.lookahead.insert(out.lookahead.end(), steps.begin(), steps.end());
        }
        auto rest = cursor.drain();
        out.lookahead.insert(out.lookahead.end(), rest.begin(), rest.end());
        return out;
    };

    const std::string context(context_text);

    // Index of the first part whose end is a boundary of every tokenizer, among
    // part ends at or before settled.
    const auto first_common = [&](std::size_t candidates, std::size_t settled) -> std::optional<std::size_t> {
        if (candidates == 0) {
            return std::nullopt;
        }
        std::vector<std::vector<std::size_t>> boundaries;
        for (const Tokenizer *t : all_tokenizers) {
            boundaries.push_back(segment_boundaries(*t, context, generated, options.window));
        }
        std::size_t offset = 0;
        for (std::size_t i = 0; i < candidates; ++i) {
            offset += parts[i].text.size();
            if (offset > settled) {
                break;
            }
            const bool common = std::all_of(boundaries.begin(), boundaries.end(), [&](const auto &b) {
                return std::binary_search(b.begin(), b.end(), offset);
            });
            if (common) {
                return i;
            }
        }
        return std::nullopt;
    };

    while (true) {
        Segment part;
        try {
            part = read_shortest(cursor, origin, context + generated, options);
        } catch (const Error &e) {
            if (e.code() != ErrorCode::StreamEnded || parts.empty()) {
                throw;
            }
            const auto found = first_common(parts.size() - 1, generated.size());
            return merge(found ? *found + 1 : parts.size());
        }
        cursor.push_back_front(part.lookahead);
        part.lookahead.clear();
        generated += part.text;
        consumed += part.origin_tokens.size();
        const bool ended = part.eos || part.token_budget_hit;
        parts.push_back(std::move(part));

        // Text up to the start of the last word cannot be retokenized by later
        // text; once the stream ends all of it is final.
        const std::size_t settled = ended ? generated.size() : last_word_start(generated);
        if (const auto found = first_common(parts.size() - 1, settled)) {
            return merge(*found + 1);
        }
        if (ended) {
            return merge(parts.size());
        }
        if (consumed >= options.token_cap) {
            Segment out = merge(parts.size());
            out.token_budget_hit = true;
            return out;
        }
    }
}

} // namespace textfuse
