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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace textfuse {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// How much boundary information a tokenizer exposes about its decoded text.
enum class TokenizerCategory {
    WordIds,     // words and the token range of each word
    CharOffsets, // start/end character offsets per token
    Opaque,      // encode/decode only
};

std::string_view category_name(TokenizerCategory category);
TokenizerCategory category_from_name(std::string_view name);

struct WordSpan {
    std::string text;
    std::size_t first_token = 0;
    std::size_t last_token = 0; // inclusive
};

// Number of trailing context words kept by incremental encode/decode.
class CodecWindow {
public:
    static constexpr std::size_t kDefaultWords = 4;

    constexpr CodecWindow() = default;
    explicit CodecWindow(std::size_t k);

    constexpr std::size_t k() const noexcept { return m_k; }

private:
    std::size_t m_k = kDefaultWords;
};

class Tokenizer {
public:
    explicit Tokenizer(std::string name) : m_name(std::move(name)) {}
    virtual ~Tokenizer() = default;

    Tokenizer(const Tokenizer &) = delete;
    Tokenizer &operator=(const Tokenizer &) = delete;

    const std::string &name() const noexcept { return m_name; }

    virtual TokenizerCategory category() const noexcept = 0;
    virtual std::size_t vocab_size() const noexcept = 0;
    virtual std::optional<TokenId> eos_id() const noexcept = 0;

    // Text a token contributes when it is not the first token of a sequence.
    virtual std::string_view token_text(TokenId id) const = 0;

    // Canonical encoding. Throws Error(EncodingFailure) for text the vocabulary
    // cannot represent or for invalid UTF-8.
    virtual TokenSeq encode(std::string_view text) const = 0;

    // Decoding without the roundtrip check; invalid byte sequences become U+FFFD.
    virtual std::string decode_raw(std::span<const TokenId> tokens) const = 0;

    // Text iff encode(text) reproduces tokens exactly, otherwise nullopt.
    std::optional<std::string> decode(std::span<const TokenId> tokens) const;

    // Words of the decoded text with their token ranges. The ranges partition
    // the sequence in order and the word texts concatenate to decode_raw(tokens).
    // Throws Error(UnsupportedCategory) for Opaque tokenizers.
    virtual std::vector<WordSpan> word_boundaries(std::span<const TokenId> tokens) const;

    // Throws Error(InvalidArgument) if any id is outside the vocabulary.
    void validate(std::span<const TokenId> tokens) const;

private:
    std::string m_name;
};

using TokenizerPtr = std::shared_ptr<const Tokenizer>;

// Whitespace-delimited words with leading whitespace attached:
// "LLMs are not" -> ["LLMs", " are", " not"].
std::vector<std::string> split_words(std::string_view text);

// The last window.k() words of text.
std::vector<std::string> last_words(std::string_view text, CodecWindow window);

std::string join_words(std::span<const std::string> words);

// Decodes new_tokens as a continuation of prev_words. prev_tail must be the
// tokenizer's encoding of the concatenated prev_words. Returns nullopt when the
// window plus new tokens does not roundtrip. Throws Error(WindowMismatch) when
// prev_tail does not decode to prev_words or more than k words are given.
std::optional<std::string> decode_incremental(const Tokenizer &tokenizer,
                                              std::span<const std::string> prev_words,
                                              std::span<const TokenId> prev_tail,
                                              std::span<const TokenId> new_tokens,
                                              CodecWindow window);

// Encodes new_text as a continuation of prev_words; the result is the token
// suffix following the window's own encoding. Throws Error(WindowMismatch) when
// the window's encoding is not a prefix of the extended encoding.
TokenSeq encode_incremental(const Tokenizer &tokenizer,
                            std::span<const std::string> prev_words,
                            std::string_view new_text,
                            CodecWindow window);

// Incremental codec bound to one tokenizer and one preceding context.
class ContextCodec {
public:
    ContextCodec(const Tokenizer &tokenizer, std::string_view context_text, CodecWindow window = {});

    const Tokenizer &tokenizer() const noexcept { return *m_tokenizer; }
    const std::vector<std::string> &words() const noexcept { return m_words; }
    const TokenSeq &tail() const noexcept { return m_tail; }

    std::optional<std::string> decode(std::span<const TokenId> tokens) const;
    TokenSeq encode(std::string_view text) const;

    // Longest prefix of tokens that decodes in this context, with its text.
    std::pair<std::size_t, std::string> longest_decodable_prefix(std::span<const TokenId> tokens) const;

private:
    const Tokenizer *m_tokenizer;
    CodecWindow m_window;
    std::vector<std::string> m_words;
    TokenSeq m_tail;
};

// |common token texts| / |union of token texts|, ignoring end-of-sequence tokens.
double vocab_overlap(const Tokenizer &a, const Tokenizer &b);

// Loads a toy tokenizer definition:
// { "category": "...", "vocab": [...], "merges": [...], "kind": "...", "eos": "..." }.
TokenizerPtr load_tokenizer(const std::filesystem::path &path);
TokenizerPtr tokenizer_from_json(std::string_view json_text, std::string name);

} // namespace textfuse
