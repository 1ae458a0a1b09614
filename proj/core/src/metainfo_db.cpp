#include "apt/metainfo.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"

#include <algorithm>
#include <unordered_set>

namespace apt {

namespace {

template <typename Map>
void sort_values(Map& m) {
    for (auto& [k, v] : m) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
}

}  // namespace

SecondaryIndexes build_indexes(const MetainfoEntities& e) {
    SecondaryIndexes idx;
    for (auto& [uri, c] : e.classes) {
        idx.classes_by_name[c.name].push_back(uri);
        if (c.super_class) idx.classes_by_super[*c.super_class].push_back(uri);
        for (auto& i : c.super_interfaces) idx.classes_by_interface[i].push_back(uri);
        for (auto& f : c.fields) idx.field_owners_by_name[f.name].push_back(uri);
    }
    for (auto& [uri, m] : e.methods) {
        if (m.is_constructor) continue;
        idx.methods_by_class_and_name[{m.owner, m.name}].push_back(uri);
        idx.methods_by_name[m.name].push_back(uri);
    }
    sort_values(idx.classes_by_name);
    sort_values(idx.classes_by_super);
    sort_values(idx.classes_by_interface);
    sort_values(idx.methods_by_class_and_name);
    sort_values(idx.methods_by_name);
    sort_values(idx.field_owners_by_name);
    return idx;
}

MetainfoDatabase::MetainfoDatabase(MetainfoEntities entities) : entities_(std::move(entities)) {
    indexes_ = build_indexes(entities_);
    // inheritance cycles are reported once here; traversals stop at revisits
    for (auto& [uri, c] : entities_.classes) {
        std::unordered_set<std::string> seen{uri.value};
        const ClassEntity* cur = parent_of(c);
        while (cur) {
            if (!seen.insert(cur->uri.value).second) {
                cycles_.push_back({c.path, "inheritance cycle through " + cur->uri.value});
                break;
            }
            cur = parent_of(*cur);
        }
    }
}

const ClassEntity* MetainfoDatabase::find_class(const Uri& uri) const {
    auto it = entities_.classes.find(uri);
    return it == entities_.classes.end() ? nullptr : &it->second;
}

const MethodEntity* MetainfoDatabase::find_method(const Uri& uri) const {
    auto it = entities_.methods.find(uri);
    return it == entities_.methods.end() ? nullptr : &it->second;
}

const FileEntity* MetainfoDatabase::find_file(const std::string& path) const {
    auto it = entities_.files.find(path);
    return it == entities_.files.end() ? nullptr : &it->second;
}

std::vector<const ClassEntity*> MetainfoDatabase::classes_named(std::string_view name) const {
    std::vector<const ClassEntity*> out;
    auto it = indexes_.classes_by_name.find(std::string(name));
    if (it == indexes_.classes_by_name.end()) return out;
    for (auto& uri : it->second) out.push_back(find_class(uri));
    return out;
}

std::vector<const MethodEntity*> MetainfoDatabase::methods_named(std::string_view name) const {
    std::vector<const MethodEntity*> out;
    auto it = indexes_.methods_by_name.find(std::string(name));
    if (it == indexes_.methods_by_name.end()) return out;
    for (auto& uri : it->second) out.push_back(find_method(uri));
    return out;
}

std::vector<FieldHit> MetainfoDatabase::fields_named(std::string_view name) const {
    std::vector<FieldHit> out;
    auto it = indexes_.field_owners_by_name.find(std::string(name));
    if (it == indexes_.field_owners_by_name.end()) return out;
    for (auto& uri : it->second) {
        const ClassEntity* owner = find_class(uri);
        for (auto& f : owner->fields) {
            if (f.name == name) out.push_back({owner, &f});
        }
    }
    return out;
}

std::vector<const MethodEntity*> MetainfoDatabase::methods_of(const ClassEntity& cls) const {
    std::vector<const MethodEntity*> out;
    for (auto& uri : cls.methods) {
        if (auto* m = find_method(uri)) out.push_back(m);
    }
    return out;
}

std::vector<const MethodEntity*> MetainfoDatabase::constructors_of(const ClassEntity& cls) const {
    std::vector<const MethodEntity*> out;
    for (auto& uri : cls.constructors) {
        if (auto* m = find_method(uri)) out.push_back(m);
    }
    return out;
}

std::vector<const MethodEntity*> MetainfoDatabase::methods_of(const Uri& cls, std::string_view name) const {
    std::vector<const MethodEntity*> out;
    auto it = indexes_.methods_by_class_and_name.find({cls, std::string(name)});
    if (it == indexes_.methods_by_class_and_name.end()) return out;
    for (auto& uri : it->second) out.push_back(find_method(uri));
    return out;
}

const ClassEntity* MetainfoDatabase::resolve_type(const ClassEntity& from, std::string_view type_name) const {
    std::string erased = erase_type(type_name);
    std::string qualifier;
    {
        std::string raw;
        int depth = 0;
        for (char c : type_name) {
            if (c == '<') ++depth;
            else if (c == '>') --depth;
            else if (depth == 0 && !std::isspace(static_cast<unsigned char>(c))) raw.push_back(c);
        }
        auto dot = raw.rfind('.');
        if (dot != std::string::npos) qualifier = raw.substr(0, dot);
    }
    auto candidates = classes_named(erased);
    std::erase_if(candidates, [&](const ClassEntity* c) { return c->uri == from.uri; });
    if (candidates.empty()) return nullptr;

    if (!qualifier.empty()) {
        for (auto* c : candidates) {
            if (c->package_name == qualifier) return c;
            if (c->enclosing) {
                if (auto* outer = find_class(*c->enclosing); outer && (outer->name == qualifier ||
                                                                     outer->package_name + "." + outer->name == qualifier)) {
                    return c;
                }
            }
        }
    }
    // nested in the enclosing chain of `from`
    for (const ClassEntity* scope = &from; scope;) {
        for (auto* c : candidates) {
            if (c->enclosing && *c->enclosing == scope->uri) return c;
        }
        scope = scope->enclosing ? find_class(*scope->enclosing) : nullptr;
    }
    const FileEntity* file = find_file(from.path);
    for (auto* c : candidates) {
        if (c->package_name == from.package_name && !c->enclosing) return c;
    }
    if (file) {
        for (auto& imp : file->imports) {
            for (auto* c : candidates) {
                if (imp == c->package_name + "." + c->name) return c;
            }
        }
        for (auto& imp : file->imports) {
            if (imp.size() < 2 || imp.compare(imp.size() - 2, 2, ".*") != 0) continue;
            auto pkg = imp.substr(0, imp.size() - 2);
            for (auto* c : candidates) {
                if (c->package_name == pkg) return c;
            }
        }
    }
    std::vector<const ClassEntity*> top_level;
    for (auto* c : candidates) {
        if (!c->enclosing) top_level.push_back(c);
    }
    if (top_level.size() == 1) return top_level.front();
    if (candidates.size() == 1) return candidates.front();
    return nullptr;
}

const ClassEntity* MetainfoDatabase::parent_of(const ClassEntity& cls) const {
    if (!cls.super_class) return nullptr;
    return resolve_type(cls, *cls.super_class);
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

std::vector<EntityRef> query_entity(const MetainfoDatabase& db, const QueryKey& key, EntityKind kind) {
    std::vector<EntityRef> out;
    auto& e = db.entities();
    switch (kind) {
        case EntityKind::class_:
            if (key.is_uri) {
                if (auto* c = db.find_class(Uri(key.text))) out.emplace_back(c);
            } else {
                for (auto* c : db.classes_named(key.text)) out.emplace_back(c);
            }
            break;
        case EntityKind::method:
            if (key.is_uri) {
                if (auto* m = db.find_method(Uri(key.text))) out.emplace_back(m);
            } else {
                for (auto* m : db.methods_named(key.text)) out.emplace_back(m);
            }
            break;
        case EntityKind::field:
            if (key.is_uri) {
                // field uri: <class uri>#<name>
                auto hash = key.text.rfind('#');
                if (hash == std::string::npos) break;
                if (auto* c = db.find_class(Uri(key.text.substr(0, hash)))) {
                    for (auto& f : c->fields) {
                        if (f.name == key.text.substr(hash + 1)) out.emplace_back(FieldHit{c, &f});
                    }
                }
            } else {
                for (auto& hit : db.fields_named(key.text)) out.emplace_back(hit);
            }
            break;
        case EntityKind::file:
            if (key.is_uri) {
                if (auto* f = db.find_file(key.text)) out.emplace_back(f);
            } else {
                for (auto& [path, f] : e.files) {
                    if (f.name == key.text) out.emplace_back(&f);
                }
            }
            break;
        case EntityKind::package: {
            auto it = e.packages.find(key.text);
            if (it != e.packages.end()) out.emplace_back(&it->second);
            break;
        }
    }
    return out;
}

namespace {

const ClassEntity& require_class(const MetainfoDatabase& db, const Uri& uri) {
    const ClassEntity* c = db.find_class(uri);
    if (!c) throw NotFoundError("unknown class: " + uri.value);
    return *c;
}

std::vector<const ClassEntity*> sorted_unique(std::vector<const ClassEntity*> v) {
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->uri < b->uri; });
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<const ClassEntity*> resolved_interfaces(const MetainfoDatabase& db, const ClassEntity& c) {
    std::vector<const ClassEntity*> out;
    for (auto& name : c.super_interfaces) {
        if (auto* i = db.resolve_type(c, name)) out.push_back(i);
    }
    return out;
}

std::vector<const ClassEntity*> children_of(const MetainfoDatabase& db, const ClassEntity& cls) {
    std::vector<const ClassEntity*> out;
    auto it = db.indexes().classes_by_super.find(cls.name);
    if (it == db.indexes().classes_by_super.end()) return out;
    for (auto& uri : it->second) {
        const ClassEntity* child = db.find_class(uri);
        if (child && child->uri != cls.uri && db.parent_of(*child) == &cls) out.push_back(child);
    }
    return out;
}

}  // namespace

std::vector<const ClassEntity*> common_interfaces(const MetainfoDatabase& db, const ClassEntity& a,
                                                  const ClassEntity& b) {
    auto ia = resolved_interfaces(db, a);
    auto ib = resolved_interfaces(db, b);
    std::vector<const ClassEntity*> out;
    for (auto* i : ia) {
        if (std::find(ib.begin(), ib.end(), i) != ib.end()) out.push_back(i);
    }
    return sorted_unique(std::move(out));
}

std::vector<const ClassEntity*> supertypes(const MetainfoDatabase& db, const ClassEntity& cls) {
    std::vector<const ClassEntity*> out;
    std::unordered_set<std::string> seen{cls.uri.value};
    std::vector<const ClassEntity*> frontier{&cls};
    for (std::size_t i = 0; i < frontier.size(); ++i) {
        std::vector<const ClassEntity*> next;
        if (auto* p = db.parent_of(*frontier[i])) next.push_back(p);
        for (auto* iface : resolved_interfaces(db, *frontier[i])) next.push_back(iface);
        for (auto* n : next) {
            if (!seen.insert(n->uri.value).second) continue;
            out.push_back(n);
            frontier.push_back(n);
        }
    }
    return out;
}

std::vector<const ClassEntity*> related_classes(const MetainfoDatabase& db, const Uri& uri,
                                                ClassRelation relation) {
    const ClassEntity& cls = require_class(db, uri);
    std::vector<const ClassEntity*> out;
    switch (relation) {
        case ClassRelation::ancestors: {
            std::unordered_set<std::string> seen{cls.uri.value};
            for (const ClassEntity* p = db.parent_of(cls); p; p = db.parent_of(*p)) {
                if (!seen.insert(p->uri.value).second) break;
                out.push_back(p);
            }
            return sorted_unique(std::move(out));
        }
        case ClassRelation::parent:
            if (auto* p = db.parent_of(cls)) out.push_back(p);
            return out;
        case ClassRelation::children:
            return sorted_unique(children_of(db, cls));
        case ClassRelation::siblings: {
            const ClassEntity* parent = db.parent_of(cls);
            if (!parent) return out;
            for (auto* c : children_of(db, *parent)) {
                if (c->uri != cls.uri) out.push_back(c);
            }
            return sorted_unique(std::move(out));
        }
        case ClassRelation::interface_co_implementors: {
            for (auto* iface : resolved_interfaces(db, cls)) {
                auto it = db.indexes().classes_by_interface.find(iface->name);
                if (it == db.indexes().classes_by_interface.end()) continue;
                for (auto& other_uri : it->second) {
                    if (other_uri == cls.uri) continue;
                    const ClassEntity* other = db.find_class(other_uri);
                    auto theirs = resolved_interfaces(db, *other);
                    if (std::find(theirs.begin(), theirs.end(), iface) != theirs.end()) out.push_back(other);
                }
            }
            return sorted_unique(std::move(out));
        }
    }
    return out;
}

namespace {

bool is_numeric_type(std::string_view t) {
    static const std::unordered_set<std::string_view> kNumeric = {
        "byte", "short", "int", "long", "float", "double",
        "Byte", "Short", "Integer", "Long", "Float", "Double", "Number"};
    return kNumeric.count(t) > 0;
}

}  // namespace

std::string method_match_key(const MethodEntity& method, std::string_view owner_name) {
    std::vector<std::string> types;
    for (auto& p : method.params) {
        std::string t = erase_type(p.type);
        std::string base = t;
        std::string suffix;
        auto cut = base.find_first_of("[.");
        if (cut != std::string::npos) {
            suffix = base.substr(cut);
            base = base.substr(0, cut);
        }
        if (base == owner_name) base = "#self";
        else if (is_numeric_type(base)) base = "#num";
        types.push_back(base + suffix);
    }
    return method.name + "/" + std::to_string(types.size()) + "(" + join(types, ",") + ")";
}

namespace {

std::set<std::string> declared_keys(const MetainfoDatabase& db, const ClassEntity& c) {
    std::set<std::string> keys;
    for (auto* m : db.methods_of(c)) keys.insert(method_match_key(*m, c.name));
    return keys;
}

}  // namespace

std::set<std::string> shared_methods(const MetainfoDatabase& db, const Uri& c1, const Uri& c2,
                                     const std::optional<Uri>& via_interface) {
    const ClassEntity& a = require_class(db, c1);
    const ClassEntity& b = require_class(db, c2);
    auto ka = declared_keys(db, a);
    auto kb = declared_keys(db, b);
    std::set<std::string> out;
    std::set_intersection(ka.begin(), ka.end(), kb.begin(), kb.end(), std::inserter(out, out.end()));
    if (via_interface) {
        const ClassEntity& iface = require_class(db, *via_interface);
        auto ki = declared_keys(db, iface);
        std::set<std::string> narrowed;
        std::set_intersection(out.begin(), out.end(), ki.begin(), ki.end(),
                              std::inserter(narrowed, narrowed.end()));
        out = std::move(narrowed);
    }
    return out;
}

std::vector<const MethodEntity*> counterparts(const MetainfoDatabase& db, const ClassEntity& cls,
                                              std::string_view key) {
    std::vector<const MethodEntity*> out;
    for (auto* m : db.methods_of(cls)) {
        if (method_match_key(*m, cls.name) == key) out.push_back(m);
    }
    return out;
}

std::string method_display_name(const MethodEntity& method) {
    std::vector<std::string> types;
    for (auto& p : method.params) types.push_back(erase_type(p.type));
    return method.name + "(" + join(types, ", ") + ")";
}

std::string method_reference(const MetainfoDatabase& db, const MethodEntity& method) {
    const ClassEntity* owner = db.find_class(method.owner);
    return (owner ? owner->name + "." : std::string()) + method_display_name(method);
}

}  // namespace apt
