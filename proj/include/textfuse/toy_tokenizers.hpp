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

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace textfuse {

// Token strings plus an optional end-of-sequence entry appended at the end.
class Vocabulary {
public:
    Vocabulary(std::vector<std::string> entries, std::optional<std::string> eos);

    std::size_t size() const noexcept { return m_entries.size(); }
    std::optional<TokenId> eos() const noexcept { return m_eos; }
    const std::string &text(TokenId id) const { return m_entries.at(static_cast<std::size_t>(id)); }
    std::optional<TokenId> find(std::string_view entry) const;
    std::size_t max_entry_bytes() const noexcept { return m_max_bytes; }

    // Longest vocabulary entry that prefixes text.substr(pos); nullopt if none.
    std::optional<std::pair<TokenId, std::size_t>> longest_match(std::string_view text, std::size_t pos) const;

private:
    std::vector<std::string> m_entries;
    std::unordered_map<std::string, TokenId> m_index;
    std::optional<TokenId> m_eos;
    std::size_t m_max_bytes = 0;
};

// Pre-tokenizes into words the way regex-based BPE tokenizers do (an optional
// leading space or punctuation mark glued to a letter run, digit runs,
// punctuation runs, whitespace runs) and encodes each word by longest match.
// "Multi-tasking" -> words ["Multi", "-tasking"].
class WordTokenizer final : public Tokenizer {
public:
    WordTokenizer(std::string name, std::vector<std::string> vocab, std::optional<std::string> eos);

    TokenizerCategory category() const noexcept override { return TokenizerCategory::WordIds; }
    std::size_t vocab_size() const noexcept override { return m_vocab.size(); }
    std::optional<TokenId> eos_id() const noexcept override { return m_vocab.eos(); }
    std::string_view token_text(TokenId id) const override;
    TokenSeq encode(std::string_view text) const override;
    std::string decode_raw(std::span<const TokenId> tokens) const override;
    std::vector<WordSpan> word_boundaries(std::span<const TokenId> tokens) const override;

    // Index of the word each token belongs to.
    std::vector<std::size_t> word_ids(std::span<const TokenId> tokens) const;

    static std::vector<std::string_view> pretokenize(std::string_view text);

private:
    Vocabulary m_vocab;
};

// Character-level BPE with ranked merges, applied within whitespace-delimited
// chunks (leading spaces attach to the chunk). Word information comes from
// per-token character offsets: "Multi-tasking" is a single word.
class BpeTokenizer final : public Tokenizer {
public:
    BpeTokenizer(std::string name,
                 std::vector<std::string> vocab,
                 std::vector<std::pair<std::string, std::string>> merges,
                 std::optional<std::string> eos);

    TokenizerCategory category() const noexcept override { return TokenizerCategory::CharOffsets; }
    std::size_t vocab_size() const noexcept override { return m_vocab.size(); }
    std::optional<TokenId> eos_id() const noexcept override { return m_vocab.eos(); }
    std::string_view token_text(TokenId id) const override;
    TokenSeq encode(std::string_view text) const override;
    std::string decode_raw(std::span<const TokenId> tokens) const override;
    std::vector<WordSpan> word_boundaries(std::span<const TokenId> tokens) const override;

    // [start, end) byte offsets of every token in decode_raw(tokens).
    std::vector<std::pair<std::size_t, std::size_t>> offsets(std::span<const TokenId> tokens) const;

private:
    void encode_chunk(std::string_view chunk, TokenSeq &out) const;

    Vocabulary m_vocab;
    std::unordered_map<std::string, std::size_t> m_merge_rank; // key: left + '\0' + right
};

// One token per UTF-8 byte (ids 0..255), end-of-sequence at 256. Prefixes that
// stop inside a multi-byte character do not decode.
class ByteTokenizer final : public Tokenizer {
public:
    explicit ByteTokenizer(std::string name);

    TokenizerCategory category() const noexcept override { return TokenizerCategory::Opaque; }
    std::size_t vocab_size() const noexcept override { return 257; }
    std::optional<TokenId> eos_id() const noexcept override { return 256; }
    std::string_view token_text(TokenId id) const override;
    TokenSeq encode(std::string_view text) const override;
    std::string decode_raw(std::span<const TokenId> tokens) const override;

private:
    std::vector<std::string> m_bytes;
};

// SentencePiece-style pieces where U+2581 stands for a space. Encoding prepends
// a dummy space; decoding drops the space of a leading piece, so the same piece
// decodes to "If" first in a sequence and to " If" anywhere else.
class SentencePieceTokenizer final : public Tokenizer {
public:
    static constexpr std::string_view kSpaceMark = "\xE2\x96\x81";

    SentencePieceTokenizer(std::string name, std::vector<std::string> pieces, std::optional<std::string> eos);

    TokenizerCategory category() const noexcept override { return TokenizerCategory::Opaque; }
    std::size_t vocab_size() const noexcept override { return m_vocab.size(); }
    std::optional<TokenId> eos_id() const noexcept override { return m_vocab.eos(); }
    std::string_view token_text(TokenId id) const override;
    TokenSeq encode(std::string_view text) const override;
    std::string decode_raw(std::span<const TokenId> tokens) const override;

private:
    Vocabulary m_vocab;
    std::vector<std::string> m_surface;
};

} // namespace textfuse
