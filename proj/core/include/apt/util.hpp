#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace apt {

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Collapses every run of whitespace into one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::string_view trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

/// Splits on `sep` but ignores separators nested inside (), <> or [].
std::vector<std::string> split_top_level(std::string_view text, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_upper(std::string_view name);

/// Decodes `bytes` as UTF-8, replacing invalid sequences with U+FFFD.
/// `replaced` receives the number of substitutions.
std::string sanitize_utf8(std::string_view bytes, std::size_t* replaced = nullptr);

/// Identifier tokens of Java-like source, skipping comments and string/char
/// literals. Order of first occurrence is preserved; duplicates kept.
std::vector<std::string> identifier_tokens(std::string_view source);

/// Lines of `text` without trailing '\r'.
std::vector<std::string> split_lines(std::string_view text);

// ---------------------------------------------------------------------------
// Glob matching
// ---------------------------------------------------------------------------

/// Matches a '/'-separated relative path against a glob supporting `*`, `?`
/// and `**` (any number of directories).
bool glob_match(std::string_view pattern, std::string_view path);

bool glob_match_any(const std::vector<std::string>& patterns, std::string_view path);

// ---------------------------------------------------------------------------
// Filesystem
// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// ---------------------------------------------------------------------------
// Processes
// ---------------------------------------------------------------------------

struct ProcessResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

/// Single-quoted for /bin/sh.
std::string shell_quote(const std::string& s);

/// Runs `command` through /bin/sh in `cwd`.
ProcessResult run_shell(const std::string& command, const std::filesystem::path& cwd);

}  // namespace apt
