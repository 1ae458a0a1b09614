#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace apt::cli {

using TomlValue = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;

struct TomlEntry {
    TomlValue value;
    int line = 0;
};

/// Keys are dotted: `[runner]` + `test_cmd = ...` gives "runner.test_cmd".
using TomlTable = std::map<std::string, TomlEntry>;

/// Reads the subset the tool's config needs: `[section]` headers, `key =
/// value` pairs, basic and literal strings, integers, floats, booleans,
/// string arrays (which may span lines) and `#` comments. Anything else is a
/// ConfigError naming `origin` and the line.
TomlTable parse_toml_subset(std::string_view text, const std::string& origin);

std::string_view type_name(const TomlValue& value);

}  // namespace apt::cli
