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

#include "textfuse/tokenizer.hpp"

#include "textfuse/error.hpp"
#include "textfuse/toy_tokenizers.hpp"
#include "textfuse/utf8.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace textfuse {

std::string_view category_name(TokenizerCategory category) {
    switch (category) {
    case TokenizerCategory::WordIds:
        return "WORD_IDS";
    case TokenizerCategory::CharOffsets:
        return "CHAR_OFFSETS";
    case TokenizerCategory::Opaque:
        return "OPAQUE";
    }
    return "OPAQUE";
}

TokenizerCategory category_from_name(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "WORD_IDS") {
        return TokenizerCategory::WordIds;
    }
    if (upper == "CHAR_OFFSETS") {
        return TokenizerCategory::CharOffsets;
    }
    if (upper == "OPAQUE") {
        return TokenizerCategory::Opaque;
    }
    throw Error(ErrorCode::ConfigError, "unknown tokenizer category '" + std::string(name) + "'");
}

CodecWindow::CodecWindow(std::size_t k) : m_k(k) {
    if (k < 1) {
        throw Error(ErrorCode::InvalidArgument, "codec window needs k >= 1");
    }
}

std::optional<std::string> Tokenizer::decode(std::span<const TokenId> tokens) const {
    validate(tokens);
    std::string text = decode_raw(tokens);
    TokenSeq reencoded;
    try {
        reencoded = encode(text);
    } catch (const Error &e) {
        if (e.code() == ErrorCode::EncodingFailure) {
            return std::nullopt;
        }
        throw;
    }
    if (!std::equal(reencoded.begin(), reencoded.end(), tokens.begin(), tokens.end())) {
        return std::nullopt;
    }
    return text;
}

std::vector<WordSpan> Tokenizer::word_boundaries(std::span<const TokenId>) const {
    throw Error(ErrorCode::UnsupportedCategory, "tokenizer '" + m_name + "' exposes no word information");
}

void Tokenizer::validate(std::span<const TokenId> tokens) const {
    const auto size = vocab_size();
    for (TokenId id : tokens) {
        if (id < 0 || static_cast<std::size_t>(id) >= size) {
            throw Error(ErrorCode::InvalidArgument,
                        "token id " + std::to_string(id) + " outside vocabulary of '" + m_name + "'");
        }
    }
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    bool seen_non_space = false;
    for (char ch : text) {
        const bool space = utf8::is_space(static_cast<unsigned char>(ch));
        if (space && seen_non_space) {
            words.push_back(std::move(current));
            current.clear();
            seen_non_space = false;
        }
        current.push_back(ch);
        seen_non_space = seen_non_space || !space;
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

std::vector<std::string> last_words(std::string_view text, CodecWindow window) {
    // Only the tail matters; scan back far enough to hold k + 1 word starts.
    std::size_t start = text.size();
    std::size_t starts_seen = 0;
    while (start > 0 && starts_seen <= window.k()) {
        --start;
        const bool space = utf8::is_space(static_cast<unsigned char>(text[start]));
        const bool prev_non_space = start > 0 && !utf8::is_space(static_cast<unsigned char>(text[start - 1]));
        if (space && prev_non_space) {
            ++starts_seen;
        }
    }
    auto words = split_words(text.substr(start));
    if (start > 0 && !words.empty()) {
        words.erase(words.begin()); // possibly truncated
    }
    if (words.size() > window.k()) {
        words.erase(words.begin(), words.end() - static_cast<std::ptrdiff_t>(window.k()));
    }
    return words;
}

std::string join_words(std::span<const std::string> words) {
    std::string out;
    for (const auto &w : words) {
        out += w;
    }
    return out;
}

std::optional<std::string> decode_incremental(const Tokenizer &tokenizer,
                                              std::span<const std::string> prev_words,
                                              std::span<const TokenId> prev_tail,
                                              std::span<const TokenId> new_tokens,
                                              CodecWindow window) {
    if (prev_words.size() > window.k()) {
        throw Error(ErrorCode::WindowMismatch, "more context words than the window holds");
    }
    const std::string head = join_words(prev_words);
    tokenizer.validate(prev_tail);
    if (tokenizer.decode_raw(prev_tail) != head) {
        throw Error(ErrorCode::WindowMismatch, "tail tokens do not decode to the context words");
    }
    TokenSeq joined(prev_tail.begin(), prev_tail.end());
    joined.insert(joined.end(), new_tokens.begin(), new_tokens.end());
    auto full = tokenizer.decode(joined);
    if (!full || !full->starts_with(head)) {
        return std::nullopt;
    }
    return full->substr(head.size());
}

TokenSeq encode_incremental(const Tokenizer &tokenizer,
                            std::span<const std::string> prev_words,
                            std::string_view new_text,
                            CodecWindow window) {
    if (prev_words.size() > window.k()) {
        throw Error(ErrorCode::WindowMismatch, "more context words than the window holds");
    }
    const std::string head_text = join_words(prev_words);
    const TokenSeq head = tokenizer.encode(head_text);
    TokenSeq full = tokenizer.encode(head_text + std::string(new_text));
    if (full.size() < head.size() || !std::equal(head.begin(), head.end(), full.begin())) {
        throw Error(ErrorCode::WindowMismatch, "text merges with the preceding context");
    }
    full.erase(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(head.size()));
    return full;
}

ContextCodec::ContextCodec(const Tokenizer &tokenizer, std::string_view context_text, CodecWindow window)
    : m_tokenizer(&tokenizer), m_window(window), m_words(last_words(context_text, window)),
      m_tail(tokenizer.encode(join_words(m_words))) {}

std::optional<std::string> ContextCodec::decode(std::span<const TokenId> tokens) const {
    return decode_incremental(*m_tokenizer, m_words, m_tail, tokens, m_window);
}

TokenSeq ContextCodec::encode(std::string_view text) const {
    return encode_incremental(*m_tokenizer, m_words, text, m_window);
}

std::pair<std::size_t, std::string> ContextCodec::longest_decodable_prefix(std::span<const TokenId> tokens) const {
    for (std::size_t n = tokens.size(); n > 0; --n) {
        if (auto text = decode(tokens.first(n))) {
            return {n, std::move(*text)};
        }
    }
    return {0, std::string()};
}

double vocab_overlap(const Tokenizer &a, const Tokenizer &b) {
    const auto collect = [](const Tokenizer &t) {
        std::set<std::string, std::less<>> out;
        for (std::size_t i = 0; i < t.vocab_size(); ++i) {
            const auto id = static_cast<TokenId>(i);
            if (t.eos_id() != id) {
                out.emplace(t.token_text(id));
            }
        }
        return out;
    };
    const auto sa = collect(a);
    const auto sb = collect(b);
    std::size_t common = 0;
    for (const auto &s : sa) {
        common += sb.count(s);
    }
    const std::size_t total = sa.size() + sb.size() - common;
    return total == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(total);
}

namespace {

std::vector<std::string> string_list(const nlohmann::json &j, const char *key) {
    std::vector<std::string> out;
    if (!j.contains(key)) {
        return out;
    }
    for (const auto &item : j.at(key)) {
        out.push_back(item.get<std::string>());
    }
    return out;
}

} // namespace

TokenizerPtr tokenizer_from_json(std::string_view json_text, std::string name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ConfigError, "tokenizer '" + name + "': " + e.what());
    }
    if (!j.contains("category")) {
        throw Error(ErrorCode::ConfigError, "tokenizer '" + name + "' is missing field 'category'");
    }
    if (j.contains("name")) {
        name = j.at("name").get<std::string>();
    }
    const auto category = category_from_name(j.at("category").get<std::string>());
    auto vocab = string_list(j, "vocab");
    std::optional<std::string> eos;
    if (j.contains("eos") && !j.at("eos").is_null()) {
        eos = j.at("eos").get<std::string>();
    }

    std::string kind;
    if (j.contains("kind")) {
        kind = j.at("kind").get<std::string>();
    } else if (category == TokenizerCategory::WordIds) {
        kind = "word";
    } else if (category == TokenizerCategory::CharOffsets) {
        kind = "bpe";
    } else {
        kind = vocab.empty() ? "byte" : "sentencepiece";
    }

    try {
        if (kind == "word" && category == TokenizerCategory::WordIds) {
            return std::make_shared<WordTokenizer>(std::move(name), std::move(vocab), std::move(eos));
        }
        if (kind == "bpe" && category == TokenizerCategory::CharOffsets) {
            std::vector<std::pair<std::string, std::string>> merges;
            if (j.contains("merges")) {
                for (const auto &m : j.at("merges")) {
                    if (!m.is_array() || m.size() != 2) {
                        throw Error(ErrorCode::ConfigError, "merges must be [left, right] pairs");
                    }
                    merges.emplace_back(m[0].get<std::string>(), m[1].get<std::string>());
                }
            }
            return std::make_shared<BpeTokenizer>(std::move(name), std::move(vocab), std::move(merges), std::move(eos));
        }
        if (kind == "byte" && category == TokenizerCategory::Opaque) {
            return std::make_shared<ByteTokenizer>(std::move(name));
        }
        if (kind == "sentencepiece" && category == TokenizerCategory::Opaque) {
            return std::make_shared<SentencePieceTokenizer>(std::move(name), std::move(vocab), std::move(eos));
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ConfigError, "tokenizer '" + name + "': " + e.what());
    }
    throw Error(ErrorCode::ConfigError,
                "tokenizer kind '" + kind + "' does not match category " + std::string(category_name(category)));
}

TokenizerPtr load_tokenizer(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot open tokenizer file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return tokenizer_from_json(buffer.str(), path.stem().string());
}

} // namespace textfuse
