#pragma once

#include "apt/metainfo.hpp"
#include "apt/syntax.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace apt {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class ScopeNodeKind { scope, definition, import, reference };
enum class DefKind { class_, method, field, parameter, local, type_parameter, enum_constant };
/// Which namespace a use looks into: `Foo x` (type), `foo()` (call), `foo` (value).
enum class RefRole { type, call, value };
enum class EdgeKind { scope_to_scope, def_to_scope, import_to_scope, ref_to_def, ref_to_import };

std::string_view to_string(ScopeNodeKind kind);
std::string_view to_string(DefKind kind);
std::string_view to_string(RefRole role);
std::string_view to_string(EdgeKind kind);

struct ScopeNode {
    ScopeNodeKind kind = ScopeNodeKind::scope;
    std::string name;        // scopes: grammar node kind; imports: simple name or "*"
    Span span;
    NodeId scope = kNoNode;  // parent scope for scopes, owning scope otherwise

    DefKind def_kind = DefKind::local;
    RefRole role = RefRole::value;
    bool class_body = false;   // scopes: a class, interface or enum body
    bool via_this = false;     // `this.x`: lookup starts at the enclosing class body
    std::string qualified;     // imports: full imported name without ".*"
    bool wildcard = false;
    bool is_static = false;
};

struct ScopeEdge {
    NodeId from = kNoNode;
    NodeId to = kNoNode;
    EdgeKind kind = EdgeKind::scope_to_scope;
    bool operator==(const ScopeEdge&) const = default;
};

struct ResolutionResult {
    enum class Outcome { local_def, import_hit, unresolved };

    NodeId reference = kNoNode;
    Outcome outcome = Outcome::unresolved;
    NodeId target = kNoNode;       // def or import node
    bool low_confidence = false;   // matched only through a wildcard import

    bool operator==(const ResolutionResult&) const = default;
};

/// Lexical scopes, declarations, imports and identifier uses of one file.
/// Immutable after build; resolution edges are computed once at the end of
/// construction with resolve_reference.
class ScopeGraph {
public:
    const std::string& path() const { return path_; }
    const std::vector<ScopeNode>& nodes() const { return nodes_; }
    const std::vector<ScopeEdge>& edges() const { return edges_; }
    const ScopeNode& node(NodeId id) const { return nodes_.at(id); }
    NodeId root() const { return 0; }

    std::vector<NodeId> nodes_of_kind(ScopeNodeKind kind) const;
    std::size_t count(ScopeNodeKind kind) const;
    std::size_t count(EdgeKind kind) const;

    /// Definitions owned by `scope`, in source order.
    const std::vector<NodeId>& definitions_in(NodeId scope) const;
    const std::vector<NodeId>& imports() const { return imports_; }

    /// Innermost scope whose span contains `span`.
    NodeId innermost_scope(const Span& span) const;

    /// DOT rendering with labels `kind:name:span`.
    std::string to_dot() const;

private:
    friend class ScopeGraphBuilder;
    friend ScopeGraph build_scope_graph(const std::string&, const std::string&, const LanguageProfile&);

    std::string path_;
    std::vector<ScopeNode> nodes_;
    std::vector<ScopeEdge> edges_;
    std::unordered_map<NodeId, std::vector<NodeId>> defs_by_scope_;
    std::vector<NodeId> imports_;
};

/// Throws ParseError naming the file when the source does not parse cleanly.
ScopeGraph build_scope_graph(const std::string& path, const std::string& source,
                             const LanguageProfile& profile = java_profile());

/// Innermost matching declaration along the scope chain, then imports
/// (explicit before wildcard), else unresolved. Pure.
ResolutionResult resolve_reference(const ScopeGraph& graph, NodeId reference);

/// References inside `block` that resolve to nothing, in source order.
std::vector<NodeId> unresolved_references(const ScopeGraph& graph, const Span& block);

// ---------------------------------------------------------------------------
// Static context
// ---------------------------------------------------------------------------

enum class ContextProvenance {
    unresolved,       // UR member answered by the metainfo database
    import,           // explicit import naming a repository class or member
    wildcard_import,  // wildcard import, low confidence
    member,           // enclosing-class member declared outside the block
};

std::string_view to_string(ContextProvenance p);

struct ContextEntry {
    std::string name;
    ContextProvenance provenance = ContextProvenance::unresolved;
    EntityKind kind = EntityKind::class_;
    std::vector<std::string> targets;  // class/method uris, fields as `classUri#name`
    bool ambiguous = false;
    std::string rendering;

    bool operator==(const ContextEntry&) const = default;
};

struct StaticContext {
    std::vector<ContextEntry> entries;   // first-use order
    std::vector<std::string> unknown;    // names nothing could answer

    bool empty() const { return entries.empty(); }
    const ContextEntry* find(std::string_view name) const;
    std::string render() const;
    void merge(const StaticContext& other);

    bool operator==(const StaticContext&) const = default;
};

/// Completes the unresolved references of `block` (and the enclosing-class
/// members it touches) against the database. `owner` is the class the block
/// belongs to and steers ambiguous member lookups toward its ancestors.
StaticContext resolve_ref(const ScopeGraph& graph, const Span& block, const ClassEntity* owner,
                          const MetainfoDatabase& db);

/// Lazily builds and memoizes scope graphs of repository files. Thread safe.
class ScopeGraphCache {
public:
    explicit ScopeGraphCache(std::filesystem::path root, const LanguageProfile& profile = java_profile());

    /// Throws IoError or ParseError.
    const ScopeGraph& get(const std::string& rel_path);
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    const LanguageProfile* profile_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::unique_ptr<ScopeGraph>> graphs_;
};

StaticContext resolve_ref(const MethodEntity& method, const MetainfoDatabase& db, ScopeGraphCache& graphs);

}  // namespace apt
