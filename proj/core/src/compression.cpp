#include "apt/compression.hpp"

#include "apt/util.hpp"

#include <algorithm>
#include <cctype>

namespace apt {

namespace {

constexpr std::string_view kIndent = "    ";

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool header_is(const ClassEntity& cls, std::string_view keyword) {
    auto words = split(cls.header, ' ');
    return std::find(words.begin(), words.end(), keyword) != words.end();
}

bool is_enum_constant(const ClassEntity& cls, const FieldEntity& f) {
    return header_is(cls, "enum") && f.type == cls.name && f.modifiers == "public static final" &&
           !f.initializer;
}

bool is_record_component(const ClassEntity& cls, const FieldEntity& f) {
    return cls.kind == ClassKind::record && f.modifiers == "private final" && !f.initializer;
}

}  // namespace

std::string render_field(const FieldEntity& f) {
    std::string line;
    for (auto& a : f.marker_annotations) line += a + " ";
    if (!f.modifiers.empty()) line += f.modifiers + " ";
    line += f.type + " " + f.name;
    if (f.initializer) line += " = " + *f.initializer;
    return line + ";";
}

std::string render_method_stub(const MethodEntity& m) {
    std::string out;
    for (auto& a : m.annotations) out += a + "\n";
    return out + m.header + ";";
}

namespace {

std::string doc_block(std::string_view doc, std::string_view indent) {
    auto lines = split_lines(doc);
    if (lines.size() == 1) return std::string(indent) + "/** " + lines[0] + " */\n";
    std::string out = std::string(indent) + "/**\n";
    for (auto& line : lines) out += std::string(indent) + " * " + line + "\n";
    return out + std::string(indent) + " */\n";
}

std::string first_doc_line(std::string_view doc) {
    auto lines = split_lines(doc);
    return lines.empty() ? std::string() : lines.front();
}

// Enum constants open the body and must come first in valid source.
void render_enum_constants(const ClassEntity& cls, std::string& out) {
    std::vector<std::string> constants;
    for (auto& f : cls.fields) {
        if (is_enum_constant(cls, f)) constants.push_back(f.name);
    }
    if (!constants.empty()) out += std::string(kIndent) + join(constants, ", ") + ";\n";
}

}  // namespace

std::size_t WordPunctTokenizer::count(std::string_view text) const {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
        } else if (is_word_char(c)) {
            while (i < text.size() && is_word_char(static_cast<unsigned char>(text[i]))) ++i;
            ++n;
        } else {
            ++i;
            ++n;
        }
    }
    return n;
}

const Tokenizer& default_tokenizer() {
    static const WordPunctTokenizer tokenizer;
    return tokenizer;
}

std::string reindent(std::string_view text, std::uint32_t start_col, std::string_view indent) {
    auto lines = split_lines(text);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (i > 0) {
            std::size_t strip = 0;
            while (strip < start_col && strip < line.size() && (line[strip] == ' ' || line[strip] == '\t')) ++strip;
            line.remove_prefix(strip);
        }
        if (!line.empty()) out += std::string(indent) + std::string(line);
        out.push_back('\n');
    }
    return out;
}

MontageRendering class_montage(const MetainfoDatabase& db, const ClassEntity& cls) {
    MontageRendering r;
    r.text = cls.header + " {\n";
    render_enum_constants(cls, r.text);
    for (auto& f : cls.fields) {
        if (is_enum_constant(cls, f) || is_record_component(cls, f)) continue;
        if (!f.docstring.empty()) r.text += std::string(kIndent) + "/** " + first_doc_line(f.docstring) + " */\n";
        r.text += std::string(kIndent) + render_field(f) + "\n";
    }
    for (auto* m : db.methods_of(cls)) {
        if (!m->docstring.empty()) r.text += std::string(kIndent) + "/** " + first_doc_line(m->docstring) + " */\n";
        for (auto& a : m->annotations) r.text += std::string(kIndent) + a + "\n";
        r.text += std::string(kIndent) + m->header + ";\n";
        r.signatures.push_back(m->signature);
    }
    for (auto& inner_uri : cls.inner_classes) {
        if (auto* inner = db.find_class(inner_uri)) r.text += std::string(kIndent) + inner->header + " { }\n";
    }
    r.text += "}\n";
    return r;
}

std::set<std::string> resolve_keep(const MetainfoDatabase& db, const ClassEntity& cls,
                                   const std::set<std::string>& keep, std::vector<std::string>* unknown) {
    auto methods = db.methods_of(cls);
    std::set<std::string> out;
    for (auto& entry : keep) {
        std::string wanted = normalize_whitespace(entry);
        std::vector<const MethodEntity*> hits;
        for (auto* m : methods) {
            if (m->signature == wanted || method_display_name(*m) == wanted) hits.push_back(m);
        }
        if (hits.empty()) {
            for (auto* m : methods) {
                if (m->name == wanted) hits.push_back(m);
            }
            if (hits.size() > 1) hits.clear();  // a bare name must be unambiguous
        }
        if (hits.empty()) {
            if (unknown) unknown->push_back(entry);
            continue;
        }
        for (auto* m : hits) out.insert(m->signature);
    }
    return out;
}

ShrinkRendering class_shrink(const MetainfoDatabase& db, const ClassEntity& cls, const std::set<std::string>& keep) {
    ShrinkRendering r;
    r.kept_methods = resolve_keep(db, cls, keep, &r.unknown_keep);

    r.text = cls.header + " {\n";
    render_enum_constants(cls, r.text);
    for (auto& f : cls.fields) {
        if (is_enum_constant(cls, f) || is_record_component(cls, f)) continue;
        if (!f.docstring.empty()) r.text += doc_block(f.docstring, kIndent);
        r.text += std::string(kIndent) + render_field(f) + "\n";
    }
    for (auto& block : cls.initializer_blocks) {
        auto lead = block.find_first_not_of(" \t");
        if (lead == std::string::npos) continue;
        r.text += "\n" + reindent(std::string_view(block).substr(lead), static_cast<std::uint32_t>(lead), kIndent);
    }

    // constructors and kept methods, interleaved in source order
    std::vector<const MethodEntity*> members = db.constructors_of(cls);
    for (auto* m : db.methods_of(cls)) {
        if (r.kept_methods.count(m->signature)) members.push_back(m);
    }
    std::sort(members.begin(), members.end(),
              [](auto* a, auto* b) { return a->span.start_byte < b->span.start_byte; });
    for (auto* m : members) {
        r.text += "\n";
        if (!m->docstring.empty()) r.text += doc_block(m->docstring, kIndent);
        r.text += reindent(m->original_string, m->span.start_col, kIndent);
    }
    r.text += "}\n";
    return r;
}

}  // namespace apt
