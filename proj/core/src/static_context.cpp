#include "apt/compression.hpp"
#include "apt/error.hpp"
#include "apt/scope_graph.hpp"
#include "apt/util.hpp"

#include <algorithm>

namespace apt {

std::string_view to_string(ContextProvenance p) {
    switch (p) {
        case ContextProvenance::unresolved: return "unresolved";
        case ContextProvenance::import: return "import";
        case ContextProvenance::wildcard_import: return "wildcard_import";
        case ContextProvenance::member: return "member";
    }
    return "?";
}

const ContextEntry* StaticContext::find(std::string_view name) const {
    for (auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::string StaticContext::render() const {
    std::string out;
    for (auto& e : entries) {
        if (!out.empty()) out += "\n";
        out += e.rendering;
        if (!e.rendering.empty() && e.rendering.back() != '\n') out += "\n";
    }
    return out;
}

void StaticContext::merge(const StaticContext& other) {
    for (auto& e : other.entries) {
        bool dup = std::any_of(entries.begin(), entries.end(), [&](const ContextEntry& mine) {
            return mine.name == e.name && mine.kind == e.kind && mine.targets == e.targets;
        });
        if (!dup) entries.push_back(e);
    }
    for (auto& u : other.unknown) {
        if (std::find(unknown.begin(), unknown.end(), u) == unknown.end()) unknown.push_back(u);
    }
}

namespace {

std::string qualified_name(const MetainfoDatabase& db, const ClassEntity& cls) {
    std::string nested = cls.name;
    for (auto enc = cls.enclosing; enc;) {
        const ClassEntity* outer = db.find_class(*enc);
        if (!outer) break;
        nested = outer->name + "." + nested;
        enc = outer->enclosing;
    }
    return cls.package_name.empty() ? nested : cls.package_name + "." + nested;
}

const ClassEntity* class_by_qualified(const MetainfoDatabase& db, std::string_view qualified) {
    auto dot = qualified.rfind('.');
    auto simple = dot == std::string_view::npos ? qualified : qualified.substr(dot + 1);
    for (auto* c : db.classes_named(simple)) {
        if (qualified_name(db, *c) == qualified) return c;
    }
    return nullptr;
}

std::string field_uri(const ClassEntity& owner, const FieldEntity& f) { return owner.uri.value + "#" + f.name; }

std::string render_class(const MetainfoDatabase& db, const ClassEntity& cls) {
    return "// " + qualified_name(db, cls) + "\n" + class_montage(db, cls).text;
}

std::string render_member(const MetainfoDatabase& db, const ClassEntity& owner, const std::string& body) {
    return "// member of " + qualified_name(db, owner) + "\n" + body + "\n";
}

class ContextBuilder {
public:
    ContextBuilder(const ScopeGraph& g, const ClassEntity* owner, const MetainfoDatabase& db)
        : g_(g), owner_(owner), db_(db) {
        for (const ClassEntity* c = owner; c;) {
            chain_.push_back(c);
            c = c->enclosing ? db.find_class(*c->enclosing) : nullptr;
        }
        for (auto* c : chain_) {
            preferred_.insert(c->uri.value);
            for (auto* a : supertypes(db, *c)) preferred_.insert(a->uri.value);
        }
    }

    StaticContext run(const Span& block) {
        std::vector<NodeId> refs;
        for (NodeId i = 0; i < g_.nodes().size(); ++i) {
            const auto& n = g_.node(i);
            if (n.kind == ScopeNodeKind::reference && block.contains(n.span)) refs.push_back(i);
        }
        std::stable_sort(refs.begin(), refs.end(),
                         [&](NodeId a, NodeId b) { return g_.node(a).span.start_byte < g_.node(b).span.start_byte; });
        for (NodeId r : refs) {
            auto res = resolve_reference(g_, r);
            switch (res.outcome) {
                case ResolutionResult::Outcome::local_def: member(g_.node(r), g_.node(res.target), block); break;
                case ResolutionResult::Outcome::import_hit: imported(g_.node(r), g_.node(res.target)); break;
                case ResolutionResult::Outcome::unresolved: unresolved(g_.node(r)); break;
            }
        }
        return std::move(ctx_);
    }

private:
    const ScopeGraph& g_;
    const ClassEntity* owner_;
    const MetainfoDatabase& db_;
    std::vector<const ClassEntity*> chain_;
    std::set<std::string> preferred_;
    std::set<std::string> seen_;
    StaticContext ctx_;

    bool first_time(const std::string& key) { return seen_.insert(key).second; }

    void add(ContextEntry e) { ctx_.entries.push_back(std::move(e)); }

    // Fields and methods of the enclosing classes that the block uses but
    // does not declare.
    void member(const ScopeNode& ref, const ScopeNode& def, const Span& block) {
        if (block.contains(def.span)) return;
        if (def.def_kind != DefKind::field && def.def_kind != DefKind::enum_constant && def.def_kind != DefKind::method) {
            return;
        }
        if (!g_.node(def.scope).class_body) return;
        bool is_method = def.def_kind == DefKind::method;
        if (!first_time("member:" + std::string(is_method ? "m:" : "f:") + ref.name)) return;
        for (auto* cls : chain_) {
            ContextEntry e;
            e.name = ref.name;
            e.provenance = ContextProvenance::member;
            if (is_method) {
                auto methods = db_.methods_of(cls->uri, ref.name);
                if (methods.empty()) continue;
                e.kind = EntityKind::method;
                std::string body;
                for (auto* m : methods) {
                    e.targets.push_back(m->uri.value);
                    if (!body.empty()) body += "\n";
                    body += render_method_stub(*m);
                }
                e.rendering = render_member(db_, *cls, body);
            } else {
                auto it = std::find_if(cls->fields.begin(), cls->fields.end(),
                                       [&](const FieldEntity& f) { return f.name == ref.name; });
                if (it == cls->fields.end()) continue;
                e.kind = EntityKind::field;
                e.targets.push_back(field_uri(*cls, *it));
                e.rendering = render_member(db_, *cls, render_field(*it));
            }
            add(std::move(e));
            return;
        }
    }

    void add_class(const std::string& name, const ClassEntity& cls, ContextProvenance p) {
        if (!first_time("class:" + cls.uri.value)) return;
        ContextEntry e;
        e.name = name;
        e.provenance = p;
        e.kind = EntityKind::class_;
        e.targets.push_back(cls.uri.value);
        e.rendering = render_class(db_, cls);
        add(std::move(e));
    }

    // Static member import: methods first, then fields.
    void add_static_member(const std::string& name, const ClassEntity& cls, ContextProvenance p) {
        if (!first_time("static:" + cls.uri.value + "." + name)) return;
        ContextEntry e;
        e.name = name;
        e.provenance = p;
        auto methods = db_.methods_of(cls.uri, name);
        if (!methods.empty()) {
            e.kind = EntityKind::method;
            std::string body;
            for (auto* m : methods) {
                e.targets.push_back(m->uri.value);
                if (!body.empty()) body += "\n";
                body += render_method_stub(*m);
            }
            e.rendering = render_member(db_, cls, body);
        } else {
            auto it = std::find_if(cls.fields.begin(), cls.fields.end(),
                                   [&](const FieldEntity& f) { return f.name == name; });
            if (it == cls.fields.end()) return;
            e.kind = EntityKind::field;
            e.targets.push_back(field_uri(cls, *it));
            e.rendering = render_member(db_, cls, render_field(*it));
        }
        add(std::move(e));
    }

    void imported(const ScopeNode& ref, const ScopeNode& imp) {
        if (!imp.wildcard) {
            if (!imp.is_static) {
                if (auto* cls = class_by_qualified(db_, imp.qualified)) add_class(ref.name, *cls, ContextProvenance::import);
                return;
            }
            auto dot = imp.qualified.rfind('.');
            if (dot == std::string::npos) return;
            if (auto* cls = class_by_qualified(db_, imp.qualified.substr(0, dot))) {
                add_static_member(ref.name, *cls, ContextProvenance::import);
            }
            return;
        }
        if (!imp.is_static) {
            if (auto* cls = class_by_qualified(db_, imp.qualified + "." + ref.name)) {
                add_class(ref.name, *cls, ContextProvenance::wildcard_import);
            }
            return;
        }
        if (auto* cls = class_by_qualified(db_, imp.qualified)) {
            add_static_member(ref.name, *cls, ContextProvenance::wildcard_import);
        }
    }

    template <typename T, typename OwnerOf>
    std::vector<T> prefer_related(std::vector<T> hits, OwnerOf owner_of) {
        std::vector<T> near;
        for (auto& h : hits) {
            if (preferred_.count(owner_of(h))) near.push_back(h);
        }
        return near.empty() ? hits : near;
    }

    void unresolved(const ScopeNode& ref) {
        if (g_builtin(ref.name)) return;
        std::vector<EntityKind> order;
        if (ref.role == RefRole::call) order = {EntityKind::method, EntityKind::class_, EntityKind::field};
        else if (ref.role == RefRole::type || capitalized(ref.name)) order = {EntityKind::class_, EntityKind::method, EntityKind::field};
        else order = {EntityKind::field, EntityKind::method, EntityKind::class_};

        if (!first_time("ur:" + std::string(to_string(ref.role)) + ":" + ref.name)) return;
        for (auto kind : order) {
            ContextEntry e;
            e.name = ref.name;
            e.provenance = ContextProvenance::unresolved;
            e.kind = kind;
            std::set<std::string> owners;
            if (kind == EntityKind::class_) {
                auto hits = db_.classes_named(ref.name);
                if (hits.empty()) continue;
                for (auto* c : hits) {
                    if (!first_time("class:" + c->uri.value)) continue;
                    e.targets.push_back(c->uri.value);
                    owners.insert(c->uri.value);
                    if (!e.rendering.empty()) e.rendering += "\n";
                    e.rendering += render_class(db_, *c);
                }
                if (e.targets.empty()) return;  // already present through another route
            } else if (kind == EntityKind::method) {
                auto hits = prefer_related(db_.methods_named(ref.name),
                                           [](const MethodEntity* m) { return m->owner.value; });
                if (hits.empty()) continue;
                std::map<std::string, std::string> by_owner;
                for (auto* m : hits) {
                    e.targets.push_back(m->uri.value);
                    owners.insert(m->owner.value);
                    auto& body = by_owner[m->owner.value];
                    if (!body.empty()) body += "\n";
                    body += render_method_stub(*m);
                }
                for (auto& [owner, body] : by_owner) {
                    if (!e.rendering.empty()) e.rendering += "\n";
                    e.rendering += render_member(db_, *db_.find_class(Uri(owner)), body);
                }
            } else {
                auto hits = prefer_related(db_.fields_named(ref.name),
                                           [](const FieldHit& h) { return h.owner->uri.value; });
                if (hits.empty()) continue;
                for (auto& h : hits) {
                    e.targets.push_back(field_uri(*h.owner, *h.field));
                    owners.insert(h.owner->uri.value);
                    if (!e.rendering.empty()) e.rendering += "\n";
                    e.rendering += render_member(db_, *h.owner, render_field(*h.field));
                }
            }
            e.ambiguous = owners.size() > 1;
            add(std::move(e));
            return;
        }
        if (std::find(ctx_.unknown.begin(), ctx_.unknown.end(), ref.name) == ctx_.unknown.end()) {
            ctx_.unknown.push_back(ref.name);
        }
    }

    bool g_builtin(const std::string& name) const { return java_profile().builtin_types.count(name) > 0; }

    static bool capitalized(std::string_view name) {
        return !name.empty() && std::isupper(static_cast<unsigned char>(name[0]));
    }
};

}  // namespace

StaticContext resolve_ref(const ScopeGraph& graph, const Span& block, const ClassEntity* owner,
                          const MetainfoDatabase& db) {
    return ContextBuilder(graph, owner, db).run(block);
}

ScopeGraphCache::ScopeGraphCache(std::filesystem::path root, const LanguageProfile& profile)
    : root_(std::move(root)), profile_(&profile) {}

const ScopeGraph& ScopeGraphCache::get(const std::string& rel_path) {
    std::lock_guard lock(mutex_);
    auto it = graphs_.find(rel_path);
    if (it != graphs_.end()) return *it->second;
    auto source = sanitize_utf8(read_file(root_ / rel_path));
    auto graph = std::make_unique<ScopeGraph>(build_scope_graph(rel_path, source, *profile_));
    return *graphs_.emplace(rel_path, std::move(graph)).first->second;
}

StaticContext resolve_ref(const MethodEntity& method, const MetainfoDatabase& db, ScopeGraphCache& graphs) {
    const ClassEntity* owner = db.find_class(method.owner);
    if (!owner) throw NotFoundError("unknown owner class " + method.owner.value);
    return resolve_ref(graphs.get(owner->path), method.span, owner, db);
}

}  // namespace apt
