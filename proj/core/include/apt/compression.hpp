#pragma once

#include "apt/metainfo.hpp"

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace apt {

/// Counts prompt tokens. The default approximates BPE tokenizers by counting
/// word runs and individual punctuation characters.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count(std::string_view text) const = 0;
};

class WordPunctTokenizer final : public Tokenizer {
public:
    std::size_t count(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

struct MontageRendering {
    std::string text;
    std::vector<std::string> signatures;  // declaration order
};

struct ShrinkRendering {
    std::string text;
    std::set<std::string> kept_methods;     // canonical signatures
    std::vector<std::string> unknown_keep;  // keep entries that matched nothing
};

/// Header, fields and one `header;` line per declared method; no bodies.
MontageRendering class_montage(const MetainfoDatabase& db, const ClassEntity& cls);

/// Fields, initializer blocks, constructors and the kept methods with their
/// bodies, in declaration order. `keep` entries may be canonical signatures,
/// `name(Types)` display names, or bare names that match a single method.
ShrinkRendering class_shrink(const MetainfoDatabase& db, const ClassEntity& cls,
                             const std::set<std::string>& keep);

/// The subset of `keep` entries resolved to canonical signatures of `cls`.
std::set<std::string> resolve_keep(const MetainfoDatabase& db, const ClassEntity& cls,
                                   const std::set<std::string>& keep, std::vector<std::string>* unknown = nullptr);

/// `modifiers type name = init;` on one line, marker annotations first.
std::string render_field(const FieldEntity& field);

/// Annotation lines followed by `header;`.
std::string render_method_stub(const MethodEntity& method);

/// Re-indents a node's text (whose first line starts at `start_col`) so that
/// its first line begins with `indent`.
std::string reindent(std::string_view text, std::uint32_t start_col, std::string_view indent);

}  // namespace apt
