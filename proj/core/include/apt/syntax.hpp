#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <tree_sitter/api.h>

namespace apt {

/// Byte range plus zero-based row/column of both ends.
struct Span {
    std::uint32_t start_byte = 0;
    std::uint32_t end_byte = 0;
    std::uint32_t start_row = 0;
    std::uint32_t start_col = 0;
    std::uint32_t end_row = 0;
    std::uint32_t end_col = 0;

    bool contains(const Span& other) const {
        return start_byte <= other.start_byte && other.end_byte <= end_byte;
    }
    bool operator==(const Span&) const = default;
};

enum class ClassKind { class_, interface, abstract_class, record, test_class };

std::string_view to_string(ClassKind kind);
ClassKind class_kind_from_string(std::string_view text);

/// Maps grammar node kinds of one language onto schema entities. The indexer
/// and the scope-graph builder only consult these tables, so a new language is
/// a new profile.
struct LanguageProfile {
    std::string name;
    std::vector<std::string> extensions;
    const TSLanguage* (*language)() = nullptr;

    std::unordered_map<std::string, ClassKind> class_nodes;
    std::unordered_set<std::string> method_nodes;
    std::unordered_set<std::string> constructor_nodes;
    std::unordered_set<std::string> field_nodes;
    std::unordered_set<std::string> import_nodes;
    std::unordered_set<std::string> package_nodes;
    std::unordered_set<std::string> class_body_nodes;
    std::unordered_set<std::string> initializer_nodes;
    std::unordered_set<std::string> block_scope_nodes;
    std::unordered_set<std::string> comment_nodes;
    std::unordered_set<std::string> builtin_types;
};

const LanguageProfile& java_profile();

/// nullptr when no profile carries that name.
const LanguageProfile* find_profile(std::string_view name);

/// Non-owning view of one syntax node. Valid while its tree lives.
class Node {
public:
    Node() = default;
    Node(TSNode node, const std::string* source) : node_(node), source_(source) {}

    bool valid() const { return source_ && !ts_node_is_null(node_); }
    explicit operator bool() const { return valid(); }

    std::string_view kind() const { return ts_node_type(node_); }
    bool is_named() const { return ts_node_is_named(node_); }
    bool has_error() const { return ts_node_has_error(node_); }

    Node field(const char* name) const;
    Node parent() const;
    std::vector<Node> children() const;
    std::vector<Node> named_children() const;
    /// Named children whose kind equals `kind`.
    std::vector<Node> children_of_kind(std::string_view kind) const;
    Node first_child_of_kind(std::string_view kind) const;

    std::string_view text() const;
    Span span() const;
    std::uint32_t start_byte() const { return ts_node_start_byte(node_); }
    std::uint32_t end_byte() const { return ts_node_end_byte(node_); }

    /// Source from the beginning of this node's first line through its end.
    /// Leading indentation is included so the slice reproduces whole lines.
    std::string_view line_slice() const;

    TSNode raw() const { return node_; }
    const std::string& source() const { return *source_; }

    bool operator==(const Node& other) const { return ts_node_eq(node_, other.node_); }

private:
    TSNode node_{};
    const std::string* source_ = nullptr;
};

/// Owns source text and the tree parsed from it.
class SyntaxTree {
public:
    static SyntaxTree parse(std::string source, const LanguageProfile& profile);

    SyntaxTree(SyntaxTree&&) noexcept = default;
    SyntaxTree& operator=(SyntaxTree&&) noexcept = default;

    Node root() const { return Node(ts_tree_root_node(tree_.get()), source_.get()); }
    const std::string& source() const { return *source_; }
    const LanguageProfile& profile() const { return *profile_; }
    bool has_errors() const { return root().has_error(); }

    /// Location of the first ERROR or MISSING node, "row:col", or empty.
    std::string first_error_location() const;

private:
    SyntaxTree() = default;

    struct TreeDeleter {
        void operator()(TSTree* t) const { ts_tree_delete(t); }
    };

    // heap-held so Node's pointer to the text survives moves of SyntaxTree
    std::unique_ptr<std::string> source_;
    std::unique_ptr<TSTree, TreeDeleter> tree_;
    const LanguageProfile* profile_ = nullptr;
};

/// Javadoc-style comment text immediately preceding `node` (ignoring
/// annotations), with comment markers and leading asterisks stripped.
std::string leading_doc_comment(const Node& node);

/// Source text of the doc comment immediately preceding `node`, verbatim.
std::string_view leading_doc_comment_raw(const Node& node);

}  // namespace apt
