#include "apt/syntax.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <cstring>

extern "C" const TSLanguage* tree_sitter_java(void);

namespace apt {

std::string_view to_string(ClassKind kind) {
    switch (kind) {
        case ClassKind::class_: return "class";
        case ClassKind::interface: return "interface";
        case ClassKind::abstract_class: return "abstract_class";
        case ClassKind::record: return "record";
        case ClassKind::test_class: return "test_class";
    }
    return "class";
}

ClassKind class_kind_from_string(std::string_view text) {
    if (text == "class") return ClassKind::class_;
    if (text == "interface") return ClassKind::interface;
    if (text == "abstract_class") return ClassKind::abstract_class;
    if (text == "record") return ClassKind::record;
    if (text == "test_class") return ClassKind::test_class;
    throw SchemaError("unknown class kind: " + std::string(text));
}

const LanguageProfile& java_profile() {
    static const LanguageProfile profile = [] {
        LanguageProfile p;
        p.name = "java";
        p.extensions = {".java"};
        p.language = &tree_sitter_java;
        p.class_nodes = {
            {"class_declaration", ClassKind::class_},
            {"enum_declaration", ClassKind::class_},
            {"interface_declaration", ClassKind::interface},
            {"annotation_type_declaration", ClassKind::interface},
            {"record_declaration", ClassKind::record},
        };
        p.method_nodes = {"method_declaration", "annotation_type_element_declaration"};
        p.constructor_nodes = {"constructor_declaration", "compact_constructor_declaration"};
        p.field_nodes = {"field_declaration", "constant_declaration"};
        p.import_nodes = {"import_declaration"};
        p.package_nodes = {"package_declaration"};
        p.class_body_nodes = {"class_body", "interface_body", "enum_body", "annotation_type_body",
                              "enum_body_declarations"};
        p.initializer_nodes = {"static_initializer", "block"};
        p.block_scope_nodes = {"block",
                               "constructor_body",
                               "for_statement",
                               "enhanced_for_statement",
                               "catch_clause",
                               "try_with_resources_statement",
                               "switch_block_statement_group",
                               "switch_rule",
                               "lambda_expression"};
        p.comment_nodes = {"line_comment", "block_comment"};
        p.builtin_types = {"String",   "Object",    "Integer",   "Long",      "Double",
                           "Float",    "Short",     "Byte",      "Character", "Boolean",
                           "Number",   "Math",      "System",    "List",      "Map",
                           "Set",      "Collection","Iterable",  "Iterator",  "Optional",
                           "ArrayList","HashMap",   "HashSet",   "LinkedList","Arrays",
                           "Collections", "Objects", "StringBuilder", "Exception",
                           "RuntimeException", "IllegalArgumentException",
                           "IllegalStateException", "NullPointerException",
                           "UnsupportedOperationException", "Throwable", "Error",
                           "Override", "Deprecated", "SuppressWarnings", "FunctionalInterface",
                           "Class", "Void", "Thread", "Runnable", "Comparable", "var"};
        return p;
    }();
    return profile;
}

const LanguageProfile* find_profile(std::string_view name) {
    if (name == "java") return &java_profile();
    return nullptr;
}

Node Node::field(const char* name) const {
    return Node(ts_node_child_by_field_name(node_, name, static_cast<uint32_t>(std::strlen(name))),
                source_);
}

Node Node::parent() const { return Node(ts_node_parent(node_), source_); }

std::vector<Node> Node::children() const {
    std::vector<Node> out;
    const uint32_t n = ts_node_child_count(node_);
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) out.emplace_back(ts_node_child(node_, i), source_);
    return out;
}

std::vector<Node> Node::named_children() const {
    std::vector<Node> out;
    const uint32_t n = ts_node_named_child_count(node_);
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) out.emplace_back(ts_node_named_child(node_, i), source_);
    return out;
}

std::vector<Node> Node::children_of_kind(std::string_view kind) const {
    std::vector<Node> out;
    for (auto& c : named_children()) {
        if (c.kind() == kind) out.push_back(c);
    }
    return out;
}

Node Node::first_child_of_kind(std::string_view kind) const {
    for (auto& c : named_children()) {
        if (c.kind() == kind) return c;
    }
    return {};
}

std::string_view Node::text() const {
    const auto b = start_byte();
    const auto e = end_byte();
    return std::string_view(*source_).substr(b, e - b);
}

Span Node::span() const {
    const auto s = ts_node_start_point(node_);
    const auto e = ts_node_end_point(node_);
    return Span{start_byte(), end_byte(), s.row, s.column, e.row, e.column};
}

std::string_view Node::line_slice() const {
    std::string_view src(*source_);
    std::size_t b = start_byte();
    while (b > 0 && (src[b - 1] == ' ' || src[b - 1] == '\t')) --b;
    if (b > 0 && src[b - 1] != '\n') b = start_byte();  // something else precedes on the line
    return src.substr(b, end_byte() - b);
}

SyntaxTree SyntaxTree::parse(std::string source, const LanguageProfile& profile) {
    std::unique_ptr<TSParser, void (*)(TSParser*)> parser(ts_parser_new(), ts_parser_delete);
    if (!ts_parser_set_language(parser.get(), profile.language())) {
        throw ParseError("grammar ABI mismatch for language " + profile.name);
    }
    SyntaxTree tree;
    tree.source_ = std::make_unique<std::string>(std::move(source));
    tree.profile_ = &profile;
    tree.tree_.reset(ts_parser_parse_string(parser.get(), nullptr, tree.source_->data(),
                                            static_cast<uint32_t>(tree.source_->size())));
    if (!tree.tree_) throw ParseError("parser produced no tree");
    return tree;
}

namespace {

bool find_error(TSNode node, TSPoint& at) {
    if (ts_node_is_error(node) || ts_node_is_missing(node)) {
        at = ts_node_start_point(node);
        return true;
    }
    if (!ts_node_has_error(node)) return false;
    const uint32_t n = ts_node_child_count(node);
    for (uint32_t i = 0; i < n; ++i) {
        if (find_error(ts_node_child(node, i), at)) return true;
    }
    return false;
}

}  // namespace

std::string SyntaxTree::first_error_location() const {
    TSPoint at{};
    if (!find_error(ts_tree_root_node(tree_.get()), at)) return {};
    return std::to_string(at.row + 1) + ":" + std::to_string(at.column + 1);
}

std::string_view leading_doc_comment_raw(const Node& node) {
    TSNode prev = ts_node_prev_sibling(node.raw());
    while (!ts_node_is_null(prev)) {
        std::string_view kind = ts_node_type(prev);
        if (kind == "block_comment") {
            Node c(prev, &node.source());
            auto text = c.text();
            if (text.rfind("/**", 0) == 0) return text;
            return {};
        }
        if (kind == "line_comment") {
            prev = ts_node_prev_sibling(prev);
            continue;
        }
        break;
    }
    // modifiers (annotations) may sit between the comment and the name; the
    // tree-sitter grammar attaches the comment before the whole declaration
    return {};
}

std::string leading_doc_comment(const Node& node) {
    auto raw = leading_doc_comment_raw(node);
    if (raw.empty()) return {};
    std::string_view body = raw.substr(3, raw.size() >= 5 ? raw.size() - 5 : 0);
    std::vector<std::string> lines;
    for (auto& line : split_lines(body)) {
        std::string_view l = trim(line);
        while (!l.empty() && l.front() == '*') l.remove_prefix(1);
        l = trim(l);
        if (!l.empty()) lines.emplace_back(l);
    }
    return join(lines, "\n");
}

}  // namespace apt
