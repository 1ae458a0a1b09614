#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace apt {

/// A prompt file: a `## apt-prompt <id> v<version>` header line followed by
/// the body with `{{name}}` placeholders.
struct PromptTemplate {
    std::string id;
    int version = 0;
    std::string body;
    std::string hash;  // sha256 of the whole file, header included

    /// Substitutes every placeholder in one pass; values are not rescanned.
    /// Throws ConfigError for a placeholder without a value.
    std::string render(const std::map<std::string, std::string>& vars) const;
};

PromptTemplate parse_prompt(const std::string& text, const std::string& origin);

class PromptLibrary {
public:
    /// The templates compiled into the binary from prompts/.
    static PromptLibrary embedded();
    /// Embedded templates overridden by any `<id>.txt` found in `dir`.
    static PromptLibrary with_overrides(const std::filesystem::path& dir);

    /// Throws ConfigError for an unknown id.
    const PromptTemplate& get(const std::string& id) const;
    const std::map<std::string, PromptTemplate>& all() const { return templates_; }

private:
    std::map<std::string, PromptTemplate> templates_;
};

}  // namespace apt
