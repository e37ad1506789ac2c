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

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace textfuse::testing {

inline std::filesystem::path data_path(const std::string &relative) {
    return std::filesystem::path(TEXTFUSE_DATA_DIR) / relative;
}

inline TokenizerPtr toy_tokenizer(const std::string &name) { return load_tokenizer(data_path("tokenizers/" + name + ".json")); }

struct ToyTokenizers {
    TokenizerPtr word = toy_tokenizer("word");
    TokenizerPtr bpe = toy_tokenizer("bpe");
    TokenizerPtr sp = toy_tokenizer("sp");
    TokenizerPtr byte = toy_tokenizer("byte");

    std::vector<TokenizerPtr> all() const { return {word, bpe, sp, byte}; }
};

inline const ToyTokenizers &toys() {
    static const ToyTokenizers instance;
    return instance;
}

// Random text every toy tokenizer can encode: vocabulary words, stray letters,
// digits, punctuation, multi-byte characters and runs of spaces or newlines.
class TextGenerator {
public:
    explicit TextGenerator(std::uint64_t seed) : m_rng(seed) {}

    std::string word() {
        static const std::vector<std::string> words = {
            "LLMs", "are",  "not", "the",   "only",  "ones", "who",  "that", "can",  "be",   "used",  "for",
            "this", "hello", "world", "is",  "a",     "of",   "and",  "red",  "blue", "facts", "Multi", "tasking",
            "no",   "t",    "café", "中文", "中",    "文",   "x",    "Qz",   "42",   "7",    "é",     "aé"};
        return pick(words);
    }

    std::string separator() {
        static const std::vector<std::string> seps = {" ", " ", " ", " ", "  ", "\n", " ", "-", ", ", ". ", " : ", ""};
        return pick(seps);
    }

    std::string text(std::size_t max_words = 10) {
        std::uniform_int_distribution<std::size_t> len(0, max_words);
        const std::size_t n = len(m_rng);
        std::string out;
        if (coin(0.3)) {
            out += " ";
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) {
                out += separator();
            }
            out += word();
        }
        if (coin(0.2)) {
            out += coin(0.5) ? " ." : "!";
        }
        return out;
    }

    bool coin(double p) { return std::bernoulli_distribution(p)(m_rng); }

    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(m_rng); }

    std::mt19937_64 &rng() { return m_rng; }

private:
    const std::string &pick(const std::vector<std::string> &items) { return items[below(items.size())]; }

    std::mt19937_64 m_rng;
};

// Byte offsets that start a UTF-8 character, plus the end.
inline std::vector<std::size_t> char_boundaries(const std::string &text) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || (static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace textfuse::testing
