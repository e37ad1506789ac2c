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

#include "textfuse/toy_tokenizers.hpp"

#include "textfuse/error.hpp"
#include "textfuse/utf8.hpp"

#include <algorithm>
#include <limits>

namespace textfuse {

Vocabulary::Vocabulary(std::vector<std::string> entries, std::optional<std::string> eos)
    : m_entries(std::move(entries)) {
    if (eos && std::find(m_entries.begin(), m_entries.end(), *eos) == m_entries.end()) {
        m_entries.push_back(*eos);
    }
    for (std::size_t i = 0; i < m_entries.size(); ++i) {
        const auto &entry = m_entries[i];
        if (entry.empty() || !utf8::is_valid(entry)) {
            throw Error(ErrorCode::ConfigError, "vocabulary entry " + std::to_string(i) + " is empty or not UTF-8");
        }
        if (!m_index.emplace(entry, static_cast<TokenId>(i)).second) {
            throw Error(ErrorCode::ConfigError, "duplicate vocabulary entry '" + entry + "'");
        }
        m_max_bytes = std::max(m_max_bytes, entry.size());
    }
    if (eos) {
        m_eos = m_index.at(*eos);
    }
}

std::optional<TokenId> Vocabulary::find(std::string_view entry) const {
    auto it = m_index.find(std::string(entry));
    if (it == m_index.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::pair<TokenId, std::size_t>> Vocabulary::longest_match(std::string_view text,
                                                                         std::size_t pos) const {
    const std::size_t limit = std::min(m_max_bytes, text.size() - pos);
    for (std::size_t len = limit; len > 0; --len) {
        auto it = m_index.find(std::string(text.substr(pos, len)));
        if (it != m_index.end() && it->second != m_eos) {
            return std::make_pair(it->second, len);
        }
    }
    return std::nullopt;
}

namespace {

enum class CharClass { Letter, Digit, Space, Newline, Punct };

CharClass classify(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || cp >= 0x80) {
        return CharClass::Letter;
    }
    if (cp >= '0' && cp <= '9') {
        return CharClass::Digit;
    }
    if (cp == '\n' || cp == '\r') {
        return CharClass::Newline;
    }
    if (cp == ' ' || cp == '\t') {
        return CharClass::Space;
    }
    return CharClass::Punct;
}

std::size_t run_of(std::string_view text, std::size_t pos, auto &&pred) {
    while (pos < text.size()) {
        const auto d = utf8::decode_at(text, pos);
        if (!pred(classify(d.cp))) {
            break;
        }
        pos += d.length;
    }
    return pos;
}

void require_utf8(std::string_view text, const std::string &name) {
    if (!utf8::is_valid(text)) {
        throw Error(ErrorCode::EncodingFailure, "'" + name + "' cannot encode invalid UTF-8");
    }
}

[[noreturn]] void unencodable(const std::string &name, std::string_view text, std::size_t pos) {
    const auto d = utf8::decode_at(text, pos);
    throw Error(ErrorCode::EncodingFailure,
                "'" + name + "' has no token for '" + std::string(text.substr(pos, d.length)) + "'");
}

// Assigns every token to the pretoken piece containing its first byte, then
// groups consecutive tokens of the same piece into words.
std::vector<WordSpan> group_words(const std::vector<std::size_t> &word_of_token,
                                  std::span<const TokenId> tokens,
                                  const Tokenizer &tokenizer) {
    std::vector<WordSpan> words;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (words.empty() || word_of_token[i] != word_of_token[i - 1]) {
            words.push_back(WordSpan{std::string(), i, i});
        }
        words.back().text += tokenizer.token_text(tokens[i]);
        words.back().last_token = i;
    }
    return words;
}

std::vector<std::size_t> piece_index_by_offset(const std::vector<std::size_t> &piece_starts,
                                               const std::vector<std::size_t> &token_starts) {
    std::vector<std::size_t> out;
    out.reserve(token_starts.size());
    for (std::size_t start : token_starts) {
        auto it = std::upper_bound(piece_starts.begin(), piece_starts.end(), start);
        out.push_back(it == piece_starts.begin() ? 0 : static_cast<std::size_t>(it - piece_starts.begin() - 1));
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// WordTokenizer

WordTokenizer::WordTokenizer(std::string name, std::vector<std::string> vocab, std::optional<std::string> eos)
    : Tokenizer(std::move(name)), m_vocab(std::move(vocab), std::move(eos)) {}

std::string_view WordTokenizer::token_text(TokenId id) const {
    return id == m_vocab.eos() ? std::string_view() : std::string_view(m_vocab.text(id));
}

std::vector<std::string_view> WordTokenizer::pretokenize(std::string_view text) {
    std::vector<std::string_view> pieces;
    const auto is = [](CharClass c) { return [c](CharClass x) { return x == c; }; };
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto first = utf8::decode_at(text, pos);
        const CharClass c = classify(first.cp);
        const std::size_t after = pos + first.length;
        const CharClass next = after < text.size() ? classify(utf8::decode_at(text, after).cp) : CharClass::Newline;
        const bool has_next = after < text.size();
        std::size_t end = 0;
        if (c == CharClass::Letter) {
            end = run_of(text, pos, is(CharClass::Letter));
        } else if ((c == CharClass::Space || c == CharClass::Punct) && has_next && next == CharClass::Letter) {
            end = run_of(text, after, is(CharClass::Letter));
        } else if (c == CharClass::Digit) {
            end = run_of(text, pos, is(CharClass::Digit));
        } else if (first.cp == ' ' && has_next && next == CharClass::Digit) {
            end = run_of(text, after, is(CharClass::Digit));
        } else if (c == CharClass::Punct || (first.cp == ' ' && has_next && next == CharClass::Punct)) {
            end = run_of(text, c == CharClass::Punct ? pos : after, is(CharClass::Punct));
        } else {
            const auto space = [](CharClass x) { return x == CharClass::Space || x == CharClass::Newline; };
            end = run_of(text, pos, space);
            // A final space before a non-space stays with the next piece.
            if (end < text.size() && end - pos > 1 && text[end - 1] == ' ') {
                --end;
            }
        }
        pieces.push_back(text.substr(pos, end - pos));
        pos = end;
    }
    return pieces;
}

TokenSeq WordTokenizer::encode(std::string_view text) const {
    require_utf8(text, name());
    TokenSeq out;
    std::size_t base = 0;
    for (auto piece : pretokenize(text)) {
        for (std::size_t pos = 0; pos < piece.size();) {
            auto match = m_vocab.longest_match(piece, pos);
            if (!match) {
                unencodable(name(), text, base + pos);
            }
            out.push_back(match->first);
            pos += match->second;
        }
        base += piece.size();
    }
    return out;
}

std::string WordTokenizer::decode_raw(std::span<const TokenId> tokens) const {
    validate(tokens);
    std::string out;
    for (TokenId id : tokens) {
        out += token_text(id);
    }
    return out;
}

std::vector<std::size_t> WordTokenizer::word_ids(std::span<const TokenId> tokens) const {
    const std::string text = decode_raw(tokens);
    std::vector<std::size_t> piece_starts;
    std::size_t offset = 0;
    for (auto piece : pretokenize(text)) {
        piece_starts.push_back(offset);
        offset += piece.size();
    }
    std::vector<std::size_t> token_starts;
    offset = 0;
    for (TokenId id : tokens) {
        token_starts.push_back(offset);
        offset += token_text(id).size();
    }
    return piece_index_by_offset(piece_starts, token_starts);
}

std::vector<WordSpan> WordTokenizer::word_boundaries(std::span<const TokenId> tokens) const {
    return group_words(word_ids(tokens), tokens, *this);
}

// ---------------------------------------------------------------------------
// BpeTokenizer

BpeTokenizer::BpeTokenizer(std::string name,
                           std::vector<std::string> vocab,
                           std::vector<std::pair<std::string, std::string>> merges,
                           std::optional<std::string> eos)
    : Tokenizer(std::move(name)), m_vocab(std::move(vocab), std::move(eos)) {
    for (std::size_t rank = 0; rank < merges.size(); ++rank) {
        const auto &[left, right] = merges[rank];
        if (!m_vocab.find(left) || !m_vocab.find(right) || !m_vocab.find(left + right)) {
            throw Error(ErrorCode::ConfigError, "merge '" + left + "' + '" + right + "' leaves the vocabulary");
        }
        m_merge_rank.emplace(left + '\0' + right, rank);
    }
}

std::string_view BpeTokenizer::token_text(TokenId id) const {
    return id == m_vocab.eos() ? std::string_view() : std::string_view(m_vocab.text(id));
}

void BpeTokenizer::encode_chunk(std::string_view chunk, TokenSeq &out) const {
    std::vector<std::string> symbols;
    for (std::size_t pos = 0; pos < chunk.size();) {
        const auto d = utf8::decode_at(chunk, pos);
        symbols.emplace_back(chunk.substr(pos, d.length));
        pos += d.length;
    }
    while (symbols.size() > 1) {
        std::size_t best_rank = std::numeric_limits<std::size_t>::max();
        std::size_t best_at = 0;
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = m_merge_rank.find(symbols[i] + '\0' + symbols[i + 1]);
            if (it != m_merge_rank.end() && it->second < best_rank) {
                best_rank = it->second;
                best_at = i;
            }
        }
        if (best_rank == std::numeric_limits<std::size_t>::max()) {
            break;
        }
        symbols[best_at] += symbols[best_at + 1];
        symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_at) + 1);
    }
    for (const auto &s : symbols) {
        auto id = m_vocab.find(s);
        if (!id || id == m_vocab.eos()) {
            throw Error(ErrorCode::EncodingFailure, "'" + name() + "' has no token for '" + s + "'");
        }
        out.push_back(*id);
    }
}

TokenSeq BpeTokenizer::encode(std::string_view text) const {
    require_utf8(text, name());
    TokenSeq out;
    for (const auto &chunk : split_words(text)) {
        encode_chunk(chunk, out);
    }
    return out;
}

std::string BpeTokenizer::decode_raw(std::span<const TokenId> tokens) const {
    validate(tokens);
    std::string out;
    for (TokenId id : tokens) {
        out += token_text(id);
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> BpeTokenizer::offsets(std::span<const TokenId> tokens) const {
    validate(tokens);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t pos = 0;
    for (TokenId id : tokens) {
        const std::size_t len = token_text(id).size();
        out.emplace_back(pos, pos + len);
        pos += len;
    }
    return out;
}

std::vector<WordSpan> BpeTokenizer::word_boundaries(std::span<const TokenId> tokens) const {
    const std::string text = decode_raw(tokens);
    std::vector<std::size_t> chunk_starts;
    std::size_t offset = 0;
    for (const auto &chunk : split_words(text)) {
        chunk_starts.push_back(offset);
        offset += chunk.size();
    }
    std::vector<std::size_t> token_starts;
    for (const auto &[start, end] : offsets(tokens)) {
        token_starts.push_back(start);
    }
    return group_words(piece_index_by_offset(chunk_starts, token_starts), tokens, *this);
}

// ---------------------------------------------------------------------------
// ByteTokenizer

ByteTokenizer::ByteTokenizer(std::string name) : Tokenizer(std::move(name)) {
    m_bytes.reserve(256);
    for (int b = 0; b < 256; ++b) {
        m_bytes.emplace_back(1, static_cast<char>(b));
    }
}

std::string_view ByteTokenizer::token_text(TokenId id) const {
    validate(std::span<const TokenId>(&id, 1));
    return id == 256 ? std::string_view() : std::string_view(m_bytes[static_cast<std::size_t>(id)]);
}

TokenSeq ByteTokenizer::encode(std::string_view text) const {
    require_utf8(text, name());
    TokenSeq out;
    out.reserve(text.size());
    for (char ch : text) {
        out.push_back(static_cast<unsigned char>(ch));
    }
    return out;
}

std::string ByteTokenizer::decode_raw(std::span<const TokenId> tokens) const {
    validate(tokens);
    std::string bytes;
    for (TokenId id : tokens) {
        if (id != 256) {
            bytes.push_back(static_cast<char>(id));
        }
    }
    return utf8::sanitize(bytes);
}

// ---------------------------------------------------------------------------
// SentencePieceTokenizer

namespace {

std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
    std::string out;
    for (std::size_t pos = 0; pos < text.size();) {
        if (text.substr(pos, from.size()) == from) {
            out += to;
            pos += from.size();
        } else {
            out.push_back(text[pos++]);
        }
    }
    return out;
}

} // namespace

SentencePieceTokenizer::SentencePieceTokenizer(std::string name,
                                               std::vector<std::string> pieces,
                                               std::optional<std::string> eos)
    : Tokenizer(std::move(name)), m_vocab(std::move(pieces), std::move(eos)) {
    m_surface.reserve(m_vocab.size());
    for (std::size_t i = 0; i < m_vocab.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        if (id == m_vocab.eos()) {
            m_surface.emplace_back();
            continue;
        }
        const std::string &piece = m_vocab.text(id);
        if (piece.find(' ') != std::string::npos) {
            throw Error(ErrorCode::ConfigError, "piece '" + piece + "' contains a raw space");
        }
        // Space marks may only lead a piece, otherwise the window boundaries of
        // incremental encoding would be crossed by a single token.
        std::size_t lead = 0;
        while (piece.compare(lead, kSpaceMark.size(), kSpaceMark) == 0) {
            lead += kSpaceMark.size();
        }
        if (piece.find(kSpaceMark, lead) != std::string::npos) {
            throw Error(ErrorCode::ConfigError, "piece '" + piece + "' has an inner space mark");
        }
        m_surface.push_back(replace_all(piece, kSpaceMark, " "));
    }
}

std::string_view SentencePieceTokenizer::token_text(TokenId id) const {
    return m_surface.at(static_cast<std::size_t>(id));
}

TokenSeq SentencePieceTokenizer::encode(std::string_view text) const {
    require_utf8(text, name());
    TokenSeq out;
    if (text.empty()) {
        return out;
    }
    const std::string marked = std::string(kSpaceMark) + replace_all(text, " ", kSpaceMark);
    for (std::size_t pos = 0; pos < marked.size();) {
        auto match = m_vocab.longest_match(marked, pos);
        if (!match) {
            throw Error(ErrorCode::EncodingFailure, "'" + name() + "' cannot encode '" + std::string(text) + "'");
        }
        out.push_back(match->first);
        pos += match->second;
    }
    return out;
}

std::string SentencePieceTokenizer::decode_raw(std::span<const TokenId> tokens) const {
    validate(tokens);
    std::string out;
    bool first = true;
    for (TokenId id : tokens) {
        if (id == m_vocab.eos()) {
            continue;
        }
        std::string_view surface = token_text(id);
        if (first && m_vocab.text(id).starts_with(kSpaceMark)) {
            surface.remove_prefix(1);
        }
        out += surface;
        first = false;
    }
    return out;
}

} // namespace textfuse
