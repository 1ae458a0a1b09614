#include "toml_subset.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>

namespace apt::cli {

namespace {

bool is_bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

class LineParser {
public:
    LineParser(std::string_view text, const std::string& origin, int line) : text_(text), origin_(origin), line_(line) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(fmt::format("{}:{}: {}", origin_, line_, what));
    }

    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    bool at_end_or_comment() {
        skip_space();
        return pos_ >= text_.size() || text_[pos_] == '#';
    }

    bool eat(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string key() {
        skip_space();
        auto start = pos_;
        while (pos_ < text_.size() && is_bare_key_char(text_[pos_])) ++pos_;
        if (start == pos_) fail("expected a key");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string string_value() {
        skip_space();
        if (pos_ >= text_.size()) fail("expected a string");
        const char quote = text_[pos_];
        if (quote != '"' && quote != '\'') fail("expected a string");
        ++pos_;
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != quote) {
            char c = text_[pos_++];
            if (quote == '"' && c == '\\') {
                if (pos_ >= text_.size()) break;
                char e = text_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(fmt::format("unsupported escape \\{}", e));
                }
            } else {
                out += c;
            }
        }
        if (pos_ >= text_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    TomlValue scalar() {
        skip_space();
        if (pos_ >= text_.size()) fail("missing value");
        char c = text_[pos_];
        if (c == '"' || c == '\'') return string_value();
        auto start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '#' && text_[pos_] != ',' && text_[pos_] != ']' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        std::string word(text_.substr(start, pos_ - start));
        if (word == "true") return true;
        if (word == "false") return false;
        std::string digits;
        for (char d : word) {
            if (d != '_') digits += d;
        }
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
        if (ec == std::errc() && p == digits.data() + digits.size() && !digits.empty()) return i;
        double d = 0;
        auto [q, ec2] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
        if (ec2 == std::errc() && q == digits.data() + digits.size() && !digits.empty()) return d;
        fail("unsupported value '" + word + "'");
    }

private:
    std::string_view text_;
    const std::string& origin_;
    int line_;
    std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (c == '\\' && quote == '"') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

// Bracket depth outside strings, for multi-line arrays.
int bracket_balance(std::string_view line) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (c == '\\' && quote == '"') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

}  // namespace

std::string_view type_name(const TomlValue& value) {
    switch (value.index()) {
        case 0: return "string";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "boolean";
        default: return "string array";
    }
}

TomlTable parse_toml_subset(std::string_view text, const std::string& origin) {
    TomlTable table;
    std::string section;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        std::string line = lines[i];
        LineParser probe(line, origin, line_no);
        if (probe.at_end_or_comment()) continue;

        if (probe.eat('[')) {
            if (probe.eat('[')) probe.fail("arrays of tables are not supported");
            section = probe.key();
            if (probe.eat('.')) probe.fail("dotted section names are not supported");
            if (!probe.eat(']')) probe.fail("expected ']' after the section name");
            if (!probe.at_end_or_comment()) probe.fail("unexpected text after the section header");
            continue;
        }

        // an array value may continue on the following lines
        line = strip_comment(line);
        int depth = bracket_balance(line);
        while (depth > 0 && i + 1 < lines.size()) {
            line += "\n" + strip_comment(lines[++i]);
            depth = bracket_balance(line);
        }
        if (depth > 0) probe.fail("unterminated array");
        LineParser p(line, origin, line_no);
        auto key = p.key();
        if (p.eat('.')) p.fail("dotted keys are not supported");
        if (!p.eat('=')) p.fail("expected '=' after '" + key + "'");
        TomlValue value;
        if (p.eat('[')) {
            std::vector<std::string> items;
            std::string flat = line;
            std::replace(flat.begin(), flat.end(), '\n', ' ');
            LineParser a(flat, origin, line_no);
            a.key();
            a.eat('=');
            a.eat('[');
            bool first = true;
            for (;;) {
                if (a.eat(']')) break;
                if (!first && !a.eat(',')) a.fail("expected ',' or ']' in array");
                if (a.eat(']')) break;  // trailing comma
                first = false;
                auto item = a.scalar();
                if (!std::holds_alternative<std::string>(item)) a.fail("only arrays of strings are supported");
                items.push_back(std::get<std::string>(item));
            }
            if (!a.at_end_or_comment()) a.fail("unexpected text after the array");
            value = std::move(items);
        } else {
            value = p.scalar();
            if (!p.at_end_or_comment()) p.fail("unexpected text after the value");
        }
        auto full = section.empty() ? key : section + "." + key;
        if (!table.emplace(full, TomlEntry{std::move(value), line_no}).second) {
            p.fail("duplicate key '" + full + "'");
        }
    }
    return table;
}

}  // namespace apt::cli
