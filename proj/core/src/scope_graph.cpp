#include "apt/scope_graph.hpp"

#include "apt/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace apt {

std::string_view to_string(ScopeNodeKind kind) {
    switch (kind) {
        case ScopeNodeKind::scope: return "scope";
        case ScopeNodeKind::definition: return "def";
        case ScopeNodeKind::import: return "import";
        case ScopeNodeKind::reference: return "ref";
    }
    return "?";
}

std::string_view to_string(DefKind kind) {
    switch (kind) {
        case DefKind::class_: return "class";
        case DefKind::method: return "method";
        case DefKind::field: return "field";
        case DefKind::parameter: return "parameter";
        case DefKind::local: return "local";
        case DefKind::type_parameter: return "type_parameter";
        case DefKind::enum_constant: return "enum_constant";
    }
    return "?";
}

std::string_view to_string(RefRole role) {
    switch (role) {
        case RefRole::type: return "type";
        case RefRole::call: return "call";
        case RefRole::value: return "value";
    }
    return "?";
}

std::string_view to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::scope_to_scope: return "ScopeToScope";
        case EdgeKind::def_to_scope: return "DefToScope";
        case EdgeKind::import_to_scope: return "ImportToScope";
        case EdgeKind::ref_to_def: return "RefToDef";
        case EdgeKind::ref_to_import: return "RefToImport";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

class ScopeGraphBuilder {
public:
    ScopeGraphBuilder(ScopeGraph& graph, const LanguageProfile& profile) : g_(graph), profile_(profile) {}

    void build(const Node& root) {
        NodeId program = add_scope(root, kNoNode);
        for (auto& child : root.named_children()) visit(child, program);
    }

private:
    ScopeGraph& g_;
    const LanguageProfile& profile_;

    NodeId push(ScopeNode n) {
        g_.nodes_.push_back(std::move(n));
        return g_.nodes_.size() - 1;
    }

    NodeId add_scope(const Node& node, NodeId parent) {
        ScopeNode n;
        n.kind = ScopeNodeKind::scope;
        n.name = std::string(node.kind());
        n.span = node.span();
        n.scope = parent;
        n.class_body = profile_.class_body_nodes.count(n.name) > 0;
        return push(std::move(n));
    }

    void add_def(const Node& name, DefKind kind, NodeId scope) {
        if (!name) return;
        ScopeNode n;
        n.kind = ScopeNodeKind::definition;
        n.name = std::string(name.text());
        n.span = name.span();
        n.scope = scope;
        n.def_kind = kind;
        auto id = push(std::move(n));
        g_.defs_by_scope_[scope].push_back(id);
    }

    void add_ref(const Node& name, RefRole role, NodeId scope, bool via_this = false) {
        if (!name) return;
        ScopeNode n;
        n.kind = ScopeNodeKind::reference;
        n.name = std::string(name.text());
        n.span = name.span();
        n.scope = scope;
        n.role = role;
        n.via_this = via_this;
        push(std::move(n));
    }

    void add_import(const Node& decl, NodeId scope) {
        ScopeNode n;
        n.kind = ScopeNodeKind::import;
        n.span = decl.span();
        n.scope = scope;
        for (auto& c : decl.children()) {
            if (c.kind() == "static") n.is_static = true;
            if (c.kind() == "asterisk") n.wildcard = true;
            if (c.kind() == "scoped_identifier" || c.kind() == "identifier") n.qualified = std::string(c.text());
        }
        if (n.wildcard) {
            n.name = "*";
        } else {
            auto dot = n.qualified.rfind('.');
            n.name = dot == std::string::npos ? n.qualified : n.qualified.substr(dot + 1);
        }
        auto id = push(std::move(n));
        g_.imports_.push_back(id);
    }

    static Node leftmost(Node n) {
        while (n && (n.kind() == "scoped_type_identifier" || n.kind() == "scoped_identifier")) {
            auto kids = n.named_children();
            if (kids.empty()) break;
            n = kids.front();
        }
        return n;
    }

    void visit_children(const Node& node, NodeId scope) {
        for (auto& c : node.named_children()) visit(c, scope);
    }

    void visit_type_parameters(const Node& params, NodeId scope) {
        if (!params) return;
        for (auto& tp : params.children_of_kind("type_parameter")) {
            for (auto& c : tp.named_children()) {
                if (c.kind() == "type_identifier" || c.kind() == "identifier") add_def(c, DefKind::type_parameter, scope);
                else visit(c, scope);
            }
        }
    }

    void visit_formal_parameters(const Node& params, NodeId scope) {
        if (!params) return;
        for (auto& p : params.named_children()) {
            if (p.kind() == "formal_parameter") {
                for (auto& c : p.named_children()) {
                    if (c == p.field("name")) add_def(c, DefKind::parameter, scope);
                    else visit(c, scope);
                }
            } else if (p.kind() == "spread_parameter") {
                for (auto& c : p.named_children()) {
                    if (c.kind() == "variable_declarator") add_def(c.field("name"), DefKind::parameter, scope);
                    else visit(c, scope);
                }
            } else if (p.kind() == "receiver_parameter") {
                for (auto& c : p.named_children()) {
                    if (c.kind() != "identifier") visit(c, scope);
                }
            } else {
                visit(p, scope);
            }
        }
    }

    void visit_declarators(const Node& decl, DefKind kind, NodeId scope) {
        for (auto& c : decl.named_children()) {
            if (c.kind() == "variable_declarator") {
                add_def(c.field("name"), kind, scope);
                if (Node v = c.field("value")) visit(v, scope);
            } else {
                visit(c, scope);
            }
        }
    }

    void visit_class(const Node& node, NodeId scope) {
        add_def(node.field("name"), DefKind::class_, scope);
        Node body = node.field("body");
        NodeId inner = body ? add_scope(body, scope) : scope;
        visit_type_parameters(node.field("type_parameters"), inner);
        for (auto& c : node.named_children()) {
            if (c == node.field("name") || c == node.field("type_parameters") || c == body) continue;
            if (c.kind() == "modifiers") {
                visit(c, scope);
            } else if (c == node.field("parameters")) {
                // record components
                for (auto& p : c.children_of_kind("formal_parameter")) {
                    for (auto& pc : p.named_children()) {
                        if (pc == p.field("name")) add_def(pc, DefKind::field, inner);
                        else visit(pc, inner);
                    }
                }
            } else {
                visit(c, inner);
            }
        }
        if (body) visit_children(body, inner);
    }

    void visit_method(const Node& node, NodeId scope, bool is_ctor) {
        if (!is_ctor) add_def(node.field("name"), DefKind::method, scope);
        NodeId inner = add_scope(node, scope);
        visit_type_parameters(node.field("type_parameters"), inner);
        for (auto& c : node.named_children()) {
            if (c == node.field("name") || c == node.field("type_parameters")) continue;
            if (c.kind() == "modifiers") visit(c, scope);
            else if (c == node.field("parameters")) visit_formal_parameters(c, inner);
            else visit(c, inner);
        }
    }

    void visit(const Node& node, NodeId scope) {
        const std::string kind(node.kind());
        if (profile_.comment_nodes.count(kind)) return;

        if (profile_.class_nodes.count(kind)) return visit_class(node, scope);
        if (profile_.method_nodes.count(kind)) return visit_method(node, scope, false);
        if (profile_.constructor_nodes.count(kind)) return visit_method(node, scope, true);
        if (profile_.import_nodes.count(kind)) return add_import(node, scope);
        if (profile_.package_nodes.count(kind)) return;

        if (kind == "field_declaration" || kind == "constant_declaration") {
            return visit_declarators(node, DefKind::field, scope);
        }
        if (kind == "local_variable_declaration") return visit_declarators(node, DefKind::local, scope);

        if (kind == "enum_constant") {
            add_def(node.field("name"), DefKind::enum_constant, scope);
            for (auto& c : node.named_children()) {
                if (c != node.field("name")) visit(c, scope);
            }
            return;
        }
        if (kind == "lambda_expression") {
            NodeId inner = add_scope(node, scope);
            Node params = node.field("parameters");
            if (params.kind() == "identifier") {
                add_def(params, DefKind::parameter, inner);
            } else if (params.kind() == "inferred_parameters") {
                for (auto& id : params.children_of_kind("identifier")) add_def(id, DefKind::parameter, inner);
            } else {
                visit_formal_parameters(params, inner);
            }
            if (Node body = node.field("body")) visit(body, inner);
            return;
        }
        if (kind == "enhanced_for_statement") {
            NodeId inner = add_scope(node, scope);
            for (auto& c : node.named_children()) {
                if (c == node.field("name")) add_def(c, DefKind::local, inner);
                else visit(c, inner);
            }
            return;
        }
        if (kind == "catch_clause") {
            NodeId inner = add_scope(node, scope);
            for (auto& c : node.named_children()) {
                if (c.kind() == "catch_formal_parameter") {
                    for (auto& pc : c.named_children()) {
                        if (pc == c.field("name")) add_def(pc, DefKind::local, inner);
                        else visit(pc, inner);
                    }
                } else {
                    visit(c, inner);
                }
            }
            return;
        }
        if (kind == "resource") {
            for (auto& c : node.named_children()) {
                if (c == node.field("name")) add_def(c, DefKind::local, scope);
                else visit(c, scope);
            }
            return;
        }
        if (kind == "instanceof_expression") {
            for (auto& c : node.named_children()) {
                if (c == node.field("name")) add_def(c, DefKind::local, scope);
                else visit(c, scope);
            }
            return;
        }
        if (kind == "record_pattern_component") {
            for (auto& c : node.named_children()) {
                if (c.kind() == "identifier") add_def(c, DefKind::local, scope);
                else visit(c, scope);
            }
            return;
        }
        if (profile_.block_scope_nodes.count(kind) || profile_.class_body_nodes.count(kind)) {
            // class bodies reach here only as anonymous class bodies
            if (kind == "enum_body_declarations") return visit_children(node, scope);
            NodeId inner = add_scope(node, scope);
            return visit_children(node, inner);
        }

        if (kind == "method_invocation") {
            Node object = node.field("object");
            Node name = node.field("name");
            for (auto& c : node.named_children()) {
                if (c == name) {
                    if (!object) add_ref(c, RefRole::call, scope);
                    else if (object.kind() == "this") add_ref(c, RefRole::call, scope, true);
                } else {
                    visit(c, scope);
                }
            }
            return;
        }
        if (kind == "field_access") {
            Node object = node.field("object");
            Node field = node.field("field");
            visit(object, scope);
            if (object.kind() == "this" && field.kind() == "identifier") add_ref(field, RefRole::value, scope, true);
            return;
        }
        if (kind == "method_reference") {
            auto kids = node.named_children();
            if (!kids.empty()) visit(kids.front(), scope);
            return;
        }
        if (kind == "scoped_type_identifier") return add_ref(leftmost(node), RefRole::type, scope);
        if (kind == "scoped_identifier") return add_ref(leftmost(node), RefRole::value, scope);
        if (kind == "marker_annotation" || kind == "annotation") {
            add_ref(leftmost(node.field("name")), RefRole::type, scope);
            if (Node args = node.field("arguments")) visit(args, scope);
            return;
        }
        if (kind == "element_value_pair") {
            if (Node v = node.field("value")) visit(v, scope);
            return;
        }
        if (kind == "labeled_statement") {
            for (auto& c : node.named_children()) {
                if (c.kind() != "identifier") visit(c, scope);
            }
            return;
        }
        if (kind == "break_statement" || kind == "continue_statement") return;
        if (kind == "type_identifier") {
            if (node.text() != "var") add_ref(node, RefRole::type, scope);
            return;
        }
        if (kind == "identifier") return add_ref(node, RefRole::value, scope);

        visit_children(node, scope);
    }
};

ScopeGraph build_scope_graph(const std::string& path, const std::string& source, const LanguageProfile& profile) {
    auto tree = SyntaxTree::parse(source, profile);
    if (tree.has_errors()) {
        throw ParseError(path + ": syntax error at " + tree.first_error_location());
    }
    ScopeGraph g;
    g.path_ = path;
    ScopeGraphBuilder(g, profile).build(tree.root());

    for (NodeId id = 0; id < g.nodes_.size(); ++id) {
        const auto& n = g.nodes_[id];
        switch (n.kind) {
            case ScopeNodeKind::scope:
                if (n.scope != kNoNode) g.edges_.push_back({id, n.scope, EdgeKind::scope_to_scope});
                break;
            case ScopeNodeKind::definition: g.edges_.push_back({id, n.scope, EdgeKind::def_to_scope}); break;
            case ScopeNodeKind::import: g.edges_.push_back({id, n.scope, EdgeKind::import_to_scope}); break;
            case ScopeNodeKind::reference: break;
        }
    }
    for (NodeId id = 0; id < g.nodes_.size(); ++id) {
        if (g.nodes_[id].kind != ScopeNodeKind::reference) continue;
        auto r = resolve_reference(g, id);
        if (r.outcome == ResolutionResult::Outcome::local_def) {
            g.edges_.push_back({id, r.target, EdgeKind::ref_to_def});
        } else if (r.outcome == ResolutionResult::Outcome::import_hit) {
            g.edges_.push_back({id, r.target, EdgeKind::ref_to_import});
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

std::vector<NodeId> ScopeGraph::nodes_of_kind(ScopeNodeKind kind) const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == kind) out.push_back(i);
    }
    return out;
}

std::size_t ScopeGraph::count(ScopeNodeKind kind) const {
    return std::count_if(nodes_.begin(), nodes_.end(), [&](const ScopeNode& n) { return n.kind == kind; });
}

std::size_t ScopeGraph::count(EdgeKind kind) const {
    return std::count_if(edges_.begin(), edges_.end(), [&](const ScopeEdge& e) { return e.kind == kind; });
}

const std::vector<NodeId>& ScopeGraph::definitions_in(NodeId scope) const {
    static const std::vector<NodeId> kEmpty;
    auto it = defs_by_scope_.find(scope);
    return it == defs_by_scope_.end() ? kEmpty : it->second;
}

NodeId ScopeGraph::innermost_scope(const Span& span) const {
    NodeId best = root();
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.kind != ScopeNodeKind::scope || !n.span.contains(span)) continue;
        const auto& b = nodes_[best].span;
        if (n.span.end_byte - n.span.start_byte <= b.end_byte - b.start_byte) best = i;
    }
    return best;
}

std::string ScopeGraph::to_dot() const {
    auto escape = [](std::string_view s) {
        std::string out;
        for (char c : s) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        return out;
    };
    std::string out = "digraph \"" + escape(path_) + "\" {\n";
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        auto label = fmt::format("{}:{}:{}:{}-{}:{}", to_string(n.kind), n.name, n.span.start_row + 1,
                                 n.span.start_col + 1, n.span.end_row + 1, n.span.end_col + 1);
        out += fmt::format("  n{} [label=\"{}\"];\n", i, escape(label));
    }
    for (auto& e : edges_) out += fmt::format("  n{} -> n{} [label=\"{}\"];\n", e.from, e.to, to_string(e.kind));
    return out + "}\n";
}

namespace {

bool capitalized(std::string_view name) { return !name.empty() && std::isupper(static_cast<unsigned char>(name[0])); }

bool is_variable(DefKind k) {
    return k == DefKind::local || k == DefKind::parameter || k == DefKind::field || k == DefKind::enum_constant;
}

// Best visible definition of `ref` in one scope, or kNoNode.
NodeId lookup_in_scope(const ScopeGraph& g, NodeId scope, const ScopeNode& ref) {
    auto matches = [&](DefKind k, int pass) {
        switch (ref.role) {
            case RefRole::call: return pass == 0 && k == DefKind::method;
            case RefRole::type: return pass == 0 && (k == DefKind::class_ || k == DefKind::type_parameter);
            case RefRole::value: return pass == 0 ? is_variable(k) : k == DefKind::class_;
        }
        return false;
    };
    for (int pass = 0; pass < 2; ++pass) {
        NodeId latest_local = kNoNode;
        NodeId first_other = kNoNode;
        for (NodeId d : g.definitions_in(scope)) {
            const auto& def = g.node(d);
            if (def.name != ref.name || !matches(def.def_kind, pass)) continue;
            if (def.def_kind == DefKind::local) {
                // locals are visible from their declaration onward; the latest one wins
                if (def.span.start_byte >= ref.span.start_byte) continue;
                if (latest_local == kNoNode || g.node(latest_local).span.start_byte < def.span.start_byte) latest_local = d;
            } else if (first_other == kNoNode) {
                first_other = d;
            }
        }
        if (latest_local != kNoNode) return latest_local;
        if (first_other != kNoNode) return first_other;
    }
    return kNoNode;
}

}  // namespace

ResolutionResult resolve_reference(const ScopeGraph& g, NodeId reference) {
    const ScopeNode& ref = g.node(reference);
    ResolutionResult result;
    result.reference = reference;
    if (ref.kind != ScopeNodeKind::reference) return result;

    NodeId scope = ref.scope;
    if (ref.via_this) {
        while (scope != kNoNode && !g.node(scope).class_body) scope = g.node(scope).scope;
    }
    for (; scope != kNoNode; scope = g.node(scope).scope) {
        NodeId def = lookup_in_scope(g, scope, ref);
        if (def != kNoNode) {
            result.outcome = ResolutionResult::Outcome::local_def;
            result.target = def;
            return result;
        }
    }
    if (ref.via_this) return result;  // `this.x` never comes from an import

    auto explicit_ok = [&](const ScopeNode& imp) {
        return imp.is_static ? ref.role != RefRole::type : ref.role != RefRole::call;
    };
    auto wildcard_ok = [&](const ScopeNode& imp) {
        if (imp.is_static) return ref.role != RefRole::type;
        return ref.role == RefRole::type || (ref.role == RefRole::value && capitalized(ref.name));
    };
    for (NodeId i : g.imports()) {
        const auto& imp = g.node(i);
        if (!imp.wildcard && imp.name == ref.name && explicit_ok(imp)) {
            result.outcome = ResolutionResult::Outcome::import_hit;
            result.target = i;
            return result;
        }
    }
    for (NodeId i : g.imports()) {
        const auto& imp = g.node(i);
        if (imp.wildcard && wildcard_ok(imp)) {
            result.outcome = ResolutionResult::Outcome::import_hit;
            result.target = i;
            result.low_confidence = true;
            return result;
        }
    }
    return result;
}

std::vector<NodeId> unresolved_references(const ScopeGraph& g, const Span& block) {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < g.nodes().size(); ++i) {
        const auto& n = g.node(i);
        if (n.kind != ScopeNodeKind::reference || !block.contains(n.span)) continue;
        if (resolve_reference(g, i).outcome == ResolutionResult::Outcome::unresolved) out.push_back(i);
    }
    std::sort(out.begin(), out.end(),
              [&](NodeId a, NodeId b) { return g.node(a).span.start_byte < g.node(b).span.start_byte; });
    return out;
}

}  // namespace apt
