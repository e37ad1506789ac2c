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

#include "textfuse/toml.hpp"

#include "textfuse/error.hpp"
#include "textfuse/utf8.hpp"

#include <cctype>
#include <cstdint>
#include <string>

namespace textfuse {

namespace {

using nlohmann::json;

class Parser {
public:
    explicit Parser(std::string_view text) : m_text(text) {}

    json parse() {
        json root = json::object();
        json *table = &root;
        while (true) {
            skip_blank_lines();
            if (at_end()) {
                break;
            }
            if (peek() == '[') {
                table = header(root);
            } else {
                key_value(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string &what) const {
        throw Error(ErrorCode::ConfigError, "TOML line " + std::to_string(m_line) + ": " + what);
    }

    bool at_end() const { return m_pos >= m_text.size(); }
    char peek(std::size_t ahead = 0) const {
        return m_pos + ahead < m_text.size() ? m_text[m_pos + ahead] : '\0';
    }
    char take() {
        const char c = m_text[m_pos++];
        if (c == '\n') {
            ++m_line;
        }
        return c;
    }
    bool starts_with(std::string_view s) const { return m_text.substr(m_pos, s.size()) == s; }

    void skip_spaces() {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) {
            take();
        }
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!at_end() && peek() != '\n') {
                take();
            }
        }
    }
    void skip_blank_lines() {
        while (!at_end()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r') {
                take();
            }
            if (peek() != '\n') {
                return;
            }
            take();
        }
    }
    // Whitespace, comments and newlines inside arrays.
    void skip_array_space() {
        while (!at_end()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                take();
            } else {
                return;
            }
        }
    }
    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (peek() == '\r') {
            take();
        }
        if (!at_end() && take() != '\n') {
            fail("unexpected trailing characters");
        }
    }

    std::string key() {
        skip_spaces();
        std::string out;
        if (peek() == '"') {
            out = basic_string();
        } else if (peek() == '\'') {
            out = literal_string();
        } else {
            while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
                out += take();
            }
            if (out.empty()) {
                fail("expected a key");
            }
        }
        skip_spaces();
        if (peek() == '.') {
            fail("dotted keys are not supported");
        }
        return out;
    }

    json *header(json &root) {
        take();
        const bool array = peek() == '[';
        if (array) {
            take();
        }
        const std::string name = key();
        if (take() != ']' || (array && take() != ']')) {
            fail("malformed table header");
        }
        json &slot = root[name];
        if (array) {
            if (slot.is_null()) {
                slot = json::array();
            }
            if (!slot.is_array()) {
                fail("'" + name + "' is both a table and an array of tables");
            }
            slot.push_back(json::object());
            return &slot.back();
        }
        if (!slot.is_null()) {
            fail("table '" + name + "' defined twice");
        }
        slot = json::object();
        return &slot;
    }

    void key_value(json &table) {
        const std::string name = key();
        if (take() != '=') {
            fail("expected '=' after key '" + name + "'");
        }
        skip_spaces();
        if (table.contains(name)) {
            fail("duplicate key '" + name + "'");
        }
        table[name] = value();
    }

    json value() {
        const char c = peek();
        if (starts_with("\"\"\"")) {
            return multiline_string();
        }
        if (c == '"') {
            return basic_string();
        }
        if (c == '\'') {
            return literal_string();
        }
        if (c == '[') {
            return array();
        }
        if (c == '{') {
            fail("inline tables are not supported");
        }
        if (starts_with("true")) {
            m_pos += 4;
            return true;
        }
        if (starts_with("false")) {
            m_pos += 5;
            return false;
        }
        return number();
    }

    json array() {
        take();
        json out = json::array();
        while (true) {
            skip_array_space();
            if (peek() == ']') {
                take();
                return out;
            }
            if (at_end()) {
                fail("unterminated array");
            }
            out.push_back(value());
            skip_array_space();
            if (peek() == ',') {
                take();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    json number() {
        std::string digits;
        bool is_float = false;
        while (!at_end()) {
            const char c = peek();
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-') {
                digits += c;
            } else if (c == '.' || c == 'e' || c == 'E') {
                digits += c;
                is_float = true;
            } else if (c != '_') {
                break;
            }
            take();
        }
        if (digits.empty()) {
            fail("expected a value");
        }
        try {
            std::size_t used = 0;
            json out;
            if (is_float) {
                out = std::stod(digits, &used);
            } else {
                out = static_cast<std::int64_t>(std::stoll(digits, &used));
            }
            if (used != digits.size()) {
                fail("malformed number '" + digits + "'");
            }
            return out;
        } catch (const std::logic_error &) {
            fail("malformed number '" + digits + "'");
        }
    }

    void escape(std::string &out) {
        if (at_end()) {
            fail("unterminated escape");
        }
        const char c = take();
        switch (c) {
        case 'n':
            out += '\n';
            return;
        case 't':
            out += '\t';
            return;
        case 'r':
            out += '\r';
            return;
        case '"':
            out += '"';
            return;
        case '\\':
            out += '\\';
            return;
        case 'u':
        case 'U': {
            const std::size_t width = c == 'u' ? 4 : 8;
            if (m_pos + width > m_text.size()) {
                fail("short unicode escape");
            }
            const std::string hex(m_text.substr(m_pos, width));
            for (char h : hex) {
                if (!std::isxdigit(static_cast<unsigned char>(h))) {
                    fail("bad unicode escape");
                }
            }
            m_pos += width;
            const auto cp = static_cast<char32_t>(std::stoul(hex, nullptr, 16));
            if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
                fail("bad unicode escape");
            }
            utf8::append(out, cp);
            return;
        }
        default:
            fail(std::string("unknown escape \\") + c);
        }
    }

    std::string basic_string() {
        take();
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') {
                fail("unterminated string");
            }
            const char c = take();
            if (c == '"') {
                return out;
            }
            if (c == '\\') {
                escape(out);
            } else {
                out += c;
            }
        }
    }

    std::string literal_string() {
        take();
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') {
                fail("unterminated string");
            }
            const char c = take();
            if (c == '\'') {
                return out;
            }
            out += c;
        }
    }

    std::string multiline_string() {
        m_pos += 3;
        if (peek() == '\n') {
            take();
        } else if (peek() == '\r' && peek(1) == '\n') {
            take();
            take();
        }
        std::string out;
        while (true) {
            if (at_end()) {
                fail("unterminated multi-line string");
            }
            if (starts_with("\"\"\"")) {
                m_pos += 3;
                return out;
            }
            const char c = take();
            if (c == '\\') {
                if (peek() == '\n' || peek() == '\r' || peek() == ' ' || peek() == '\t') {
                    // Line-ending backslash trims following whitespace.
                    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) {
                        take();
                    }
                } else {
                    escape(out);
                }
            } else {
                out += c;
            }
        }
    }

    std::string_view m_text;
    std::size_t m_pos = 0;
    std::size_t m_line = 1;
};

} // namespace

nlohmann::json parse_toml(std::string_view text) { return Parser(text).parse(); }

} // namespace textfuse
