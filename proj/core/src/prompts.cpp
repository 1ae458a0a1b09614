#include "apt/prompts.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <regex>

#include "embedded_prompts.inc"

namespace apt {

PromptTemplate parse_prompt(const std::string& text, const std::string& origin) {
    static const std::regex header_re(R"(^## apt-prompt ([a-z_]+) v([0-9]+)[ \t]*\r?$)");
    auto eol = text.find('\n');
    std::smatch m;
    std::string header = text.substr(0, eol);
    if (!std::regex_match(header, m, header_re)) {
        throw ConfigError(origin + ": missing `## apt-prompt <id> v<N>` header");
    }
    PromptTemplate t;
    t.id = m[1];
    t.version = std::stoi(m[2]);
    t.body = eol == std::string::npos ? "" : text.substr(eol + 1);
    t.hash = sha256_hex(text);
    return t;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = body.find("{{", pos);
        if (open == std::string::npos) break;
        auto close = body.find("}}", open + 2);
        if (close == std::string::npos) break;
        auto key = body.substr(open + 2, close - open - 2);
        auto it = vars.find(key);
        if (it == vars.end()) throw ConfigError("prompt " + id + ": no value for {{" + key + "}}");
        out.append(body, pos, open - pos);
        out += it->second;
        pos = close + 2;
    }
    out.append(body, pos);
    return out;
}

PromptLibrary PromptLibrary::embedded() {
    PromptLibrary lib;
    for (auto& [name, text] : kEmbeddedPrompts) {
        auto t = parse_prompt(text, std::string("prompts/") + name);
        lib.templates_[t.id] = std::move(t);
    }
    return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
    auto lib = embedded();
    for (auto& [id, t] : embedded().templates_) {
        auto path = dir / (id + ".txt");
        if (!std::filesystem::exists(path)) continue;
        auto loaded = parse_prompt(read_file(path), path.string());
        if (loaded.id != id) throw ConfigError(path.string() + ": header names `" + loaded.id + "`");
        lib.templates_[id] = std::move(loaded);
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw ConfigError("unknown prompt template " + id);
    return it->second;
}

}  // namespace apt
