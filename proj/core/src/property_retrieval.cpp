#include "apt/property.hpp"

#include "apt/compression.hpp"
#include "apt/error.hpp"
#include "apt/util.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <tuple>

namespace apt {

using Json = nlohmann::json;

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::complete: return "Complete";
        case Phase::given: return "Given";
        case Phase::when: return "When";
        case Phase::then: return "Then";
    }
    return "Complete";
}

std::string_view to_string(RelationProvenance provenance) {
    switch (provenance) {
        case RelationProvenance::intra_llm: return "intra_llm";
        case RelationProvenance::deduced_inheritance: return "deduced_inheritance";
        case RelationProvenance::deduced_sibling: return "deduced_sibling";
        case RelationProvenance::deduced_interface: return "deduced_interface";
    }
    return "intra_llm";
}

Phase phase_from_string(std::string_view text) {
    std::string lower;
    for (char c : trim(text)) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "complete") return Phase::complete;
    if (lower == "given") return Phase::given;
    if (lower == "when") return Phase::when;
    if (lower == "then") return Phase::then;
    throw SchemaError("unknown phase: " + std::string(text));
}

RelationProvenance provenance_from_string(std::string_view text) {
    for (auto p : {RelationProvenance::intra_llm, RelationProvenance::deduced_inheritance,
                   RelationProvenance::deduced_sibling, RelationProvenance::deduced_interface}) {
        if (to_string(p) == text) return p;
    }
    throw SchemaError("unknown provenance: " + std::string(text));
}

// ---------------------------------------------------------------------------
// PropertySet
// ---------------------------------------------------------------------------

bool PropertySet::add(PropertyRelation relation) {
    relation.confidence = std::clamp(relation.confidence, 0.0, 1.0);
    auto same_pair = [&](const PropertyRelation& r) {
        return r.focal == relation.focal && r.related == relation.related;
    };
    if (relation.phase != Phase::complete) {
        for (auto& r : relations_) {
            if (same_pair(r) && r.phase == Phase::complete) return false;
        }
    }
    for (auto& r : relations_) {
        if (same_pair(r) && r.phase == relation.phase) {
            if (relation.confidence <= r.confidence) return false;
            r = std::move(relation);
            return true;
        }
    }
    if (relation.phase == Phase::complete) {
        std::erase_if(relations_, same_pair);
    }
    relations_.push_back(std::move(relation));
    return true;
}

void PropertySet::merge(const PropertySet& other) {
    for (auto& r : other.relations_) add(r);
}

std::vector<PropertyRelation> PropertySet::relations() const {
    auto out = relations_;
    std::sort(out.begin(), out.end(), [](const PropertyRelation& a, const PropertyRelation& b) {
        return std::tuple(a.focal, a.phase, -a.confidence, a.related) <
               std::tuple(b.focal, b.phase, -b.confidence, b.related);
    });
    return out;
}

const PropertyRelation* PropertySet::find(const Uri& related, Phase phase) const {
    for (auto& r : relations_) {
        if (r.related == related && r.phase == phase) return &r;
    }
    return nullptr;
}

nlohmann::ordered_json to_json(const PropertySet& set, const MetainfoDatabase& db) {
    auto rows = nlohmann::ordered_json::array();
    for (auto& r : set.relations()) {
        const MethodEntity* m = db.find_method(r.related);
        nlohmann::ordered_json row;
        row["phase"] = to_string(r.phase);
        row["method"] = m ? method_reference(db, *m) : r.related.value;
        row["related"] = r.related.value;
        row["reason"] = r.reason;
        row["confidence"] = r.confidence;
        row["external"] = r.external;
        row["provenance"] = to_string(r.provenance);
        rows.push_back(std::move(row));
    }
    return rows;
}

PropertySet property_set_from_json(const Json& rows, const Uri& focal) {
    if (!rows.is_array()) throw SchemaError("relations must be an array");
    PropertySet set;
    for (auto& row : rows) {
        try {
            PropertyRelation r;
            r.focal = focal;
            r.related = Uri(row.at("related").get<std::string>());
            r.phase = phase_from_string(row.at("phase").get<std::string>());
            r.reason = row.value("reason", "");
            r.confidence = row.at("confidence").get<double>();
            r.external = row.value("external", false);
            r.provenance = provenance_from_string(row.value("provenance", "intra_llm"));
            set.add(std::move(r));
        } catch (const Json::exception& e) {
            throw SchemaError(std::string("bad relation row: ") + e.what());
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Intra-class analysis
// ---------------------------------------------------------------------------

std::string class_context(const MetainfoDatabase& db, const ClassEntity& owner, const IntraOptions& options,
                          const Tokenizer& tokenizer) {
    std::string out = owner.original_string;
    std::size_t spent = 0;
    for (auto* ancestor : supertypes(db, owner)) {
        auto methods = db.methods_of(*ancestor);
        if (methods.empty()) continue;
        out += "\n\n// inherited from " + ancestor->name + "\n";
        for (auto* m : methods) {
            if (m->is_private()) continue;
            std::size_t cost = tokenizer.count(m->original_string);
            if (m->has_body && spent + cost <= options.inherited_budget) {
                spent += cost;
                out += reindent(m->original_string, m->span.start_col, "") + "\n";
            } else {
                out += render_method_stub(*m) + "\n";
            }
        }
    }
    return out;
}

namespace {

struct ParsedName {
    std::string qualifier;  // class part of `Class.method(...)`, may be empty
    std::string name;
    std::optional<std::vector<std::string>> params;
};

std::optional<ParsedName> parse_method_name(std::string_view text) {
    auto t = std::string(trim(text));
    ParsedName out;
    auto open = t.find('(');
    std::string head = open == std::string::npos ? t : t.substr(0, open);
    if (open != std::string::npos) {
        auto close = t.rfind(')');
        if (close == std::string::npos || close < open) return std::nullopt;
        out.params.emplace();
        auto inside = trim(std::string_view(t).substr(open + 1, close - open - 1));
        if (!inside.empty()) {
            for (auto& p : split_top_level(inside, ',')) {
                auto type = std::string(trim(p));
                auto sp = type.find_last_of(" \t");
                if (sp != std::string::npos && type.find('<') == std::string::npos) type = type.substr(0, sp);
                out.params->push_back(erase_type(type));
            }
        }
    }
    head = std::string(trim(head));
    auto dot = head.rfind('.');
    if (dot != std::string::npos) {
        out.qualifier = head.substr(0, dot);
        head = head.substr(dot + 1);
        auto cdot = out.qualifier.rfind('.');
        if (cdot != std::string::npos) out.qualifier = out.qualifier.substr(cdot + 1);
    }
    if (head.empty()) return std::nullopt;
    out.name = head;
    return out;
}

const MethodEntity* match_in(const MetainfoDatabase& db, const ClassEntity& cls, const ParsedName& name) {
    std::vector<const MethodEntity*> hits;
    for (auto* m : db.methods_of(cls.uri, name.name)) {
        if (m->is_constructor) continue;
        if (name.params) {
            if (m->params.size() != name.params->size()) continue;
            bool same = true;
            for (std::size_t i = 0; i < m->params.size() && same; ++i) {
                same = erase_type(m->params[i].type) == (*name.params)[i];
            }
            if (!same) continue;
        }
        hits.push_back(m);
    }
    return hits.size() == 1 ? hits.front() : nullptr;
}

}  // namespace

const MethodEntity* resolve_related_method(const MetainfoDatabase& db, const ClassEntity& owner,
                                           std::string_view name) {
    auto parsed = parse_method_name(name);
    if (!parsed) return nullptr;
    std::vector<const ClassEntity*> chain = {&owner};
    for (auto* s : supertypes(db, owner)) chain.push_back(s);
    if (!parsed->qualifier.empty()) {
        std::vector<const ClassEntity*> named;
        for (auto* c : chain) {
            if (c->name == parsed->qualifier) named.push_back(c);
        }
        if (named.empty()) {
            // a class outside the hierarchy; unique name only
            auto all = db.classes_named(parsed->qualifier);
            if (all.size() == 1) named = {all.front()};
        }
        for (auto* c : named) {
            if (auto* m = match_in(db, *c, *parsed)) return m;
        }
        return nullptr;
    }
    for (auto* c : chain) {
        if (auto* m = match_in(db, *c, *parsed)) return m;
    }
    return nullptr;
}

PropertySet parse_property_answer(const Json& answer, const MetainfoDatabase& db, const MethodEntity& focal,
                                  std::vector<std::string>* diagnostics) {
    const ClassEntity* owner = db.find_class(focal.owner);
    if (!owner) throw NotFoundError("owner of " + focal.uri.value + " is not indexed");
    auto note = [&](std::string message) {
        spdlog::debug("{}", message);
        if (diagnostics) diagnostics->push_back(std::move(message));
    };
    if (!answer.is_object()) throw MalformedOutput("property answer is not a JSON object");

    PropertySet set;
    auto take = [&](const Json& row, std::optional<Phase> phase) {
        if (!row.is_object() || !row.contains("method") || !row["method"].is_string()) {
            note("entry without a method name: " + row.dump());
            return;
        }
        auto name = row["method"].get<std::string>();
        const MethodEntity* m = resolve_related_method(db, *owner, name);
        if (!m) {
            note("unknown method '" + name + "' dropped");
            return;
        }
        if (m->uri == focal.uri) {
            note("focal method named as its own relation, dropped");
            return;
        }
        PropertyRelation r;
        r.focal = focal.uri;
        r.related = m->uri;
        if (phase) {
            r.phase = *phase;
        } else {
            auto p = row.find("phase");
            if (p == row.end() || !p->is_string()) {
                note("gwt entry for '" + name + "' has no phase");
                return;
            }
            try {
                r.phase = phase_from_string(p->get<std::string>());
            } catch (const SchemaError& e) {
                note(e.what());
                return;
            }
            if (r.phase == Phase::complete) {
                note("gwt entry for '" + name + "' uses phase Complete");
                return;
            }
        }
        if (auto reason = row.find("reason"); reason != row.end() && reason->is_string()) {
            r.reason = reason->get<std::string>();
        }
        auto conf = row.find("confidence");
        r.confidence = conf != row.end() && conf->is_number() ? conf->get<double>() : 0.5;
        r.external = m->owner != focal.owner;
        set.add(std::move(r));
    };
    if (auto it = answer.find("complete"); it != answer.end() && it->is_array()) {
        for (auto& row : *it) take(row, Phase::complete);
    }
    if (auto it = answer.find("gwt"); it != answer.end() && it->is_array()) {
        for (auto& row : *it) take(row, std::nullopt);
    }
    return set;
}

PropertySet analyze_intra_class(const MethodEntity& focal, const MetainfoDatabase& db, const StaticContext& sc,
                                LlmGateway& llm, const PromptLibrary& prompts, const IntraOptions& options,
                                std::vector<std::string>* diagnostics) {
    const ClassEntity* owner = db.find_class(focal.owner);
    if (!owner) throw NotFoundError("owner of " + focal.uri.value + " is not indexed");
    const auto& tmpl = prompts.get("analyze_properties");
    ChatRequest req;
    req.template_id = tmpl.id;
    req.template_hash = tmpl.hash;
    req.expected_format = ExpectedFormat::json;
    req.messages.push_back(tmpl.render({{"class_name", owner->name},
                                        {"focal_name", method_display_name(focal)},
                                        {"focal_source", reindent(focal.original_string, focal.span.start_col, "")},
                                        {"static_context", sc.empty() ? "(none)" : sc.render()},
                                        {"class_source", class_context(db, *owner, options)}}));
    auto res = llm.complete(std::move(req));
    return parse_property_answer(*res.json, db, focal, diagnostics);
}

// ---------------------------------------------------------------------------
// Inter-class deduction
// ---------------------------------------------------------------------------

PropertySet deduce_inter_class(const MetainfoDatabase& db, const PropertySet& intra, const MethodEntity& focal,
                               const Damping& damping) {
    PropertySet out;
    const ClassEntity* c1 = db.find_class(focal.owner);
    if (!c1) return out;

    struct Target {
        const ClassEntity* cls;
        std::set<std::string> shared;
        double damping;
        RelationProvenance provenance;
    };
    std::vector<Target> targets;
    auto add_targets = [&](ClassRelation rel, double d, RelationProvenance p) {
        for (auto* c2 : related_classes(db, c1->uri, rel)) {
            if (c2->uri == c1->uri) continue;
            std::set<std::string> shared;
            if (rel == ClassRelation::interface_co_implementors) {
                for (auto* iface : common_interfaces(db, *c1, *c2)) {
                    auto s = shared_methods(db, c1->uri, c2->uri, iface->uri);
                    shared.insert(s.begin(), s.end());
                }
            } else {
                shared = shared_methods(db, c1->uri, c2->uri);
            }
            if (!shared.empty()) targets.push_back({c2, std::move(shared), d, p});
        }
    };
    add_targets(ClassRelation::parent, damping.inheritance, RelationProvenance::deduced_inheritance);
    add_targets(ClassRelation::children, damping.inheritance, RelationProvenance::deduced_inheritance);
    add_targets(ClassRelation::siblings, damping.sibling, RelationProvenance::deduced_sibling);
    add_targets(ClassRelation::interface_co_implementors, damping.interface, RelationProvenance::deduced_interface);

    for (auto& r : intra.relations()) {
        if (r.focal != focal.uri) continue;
        const MethodEntity* m_a = db.find_method(r.related);
        // only relations inside the focal class carry over
        if (!m_a || m_a->owner != c1->uri) continue;
        auto key = method_match_key(*m_a, c1->name);
        for (auto& t : targets) {
            if (!t.shared.contains(key)) continue;
            for (auto* counterpart : counterparts(db, *t.cls, key)) {
                PropertyRelation d;
                d.focal = focal.uri;
                d.related = counterpart->uri;
                d.phase = r.phase;
                d.reason = r.reason;
                d.confidence = r.confidence * t.damping;
                d.external = true;
                d.provenance = t.provenance;
                out.add(std::move(d));
            }
        }
    }
    return out;
}

PropertySet retrieve(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs, LlmGateway& llm,
                     const PromptLibrary& prompts, const RetrievalOptions& options,
                     std::vector<std::string>* diagnostics) {
    auto sc = resolve_ref(focal, db, graphs);
    auto set = analyze_intra_class(focal, db, sc, llm, prompts, options.intra, diagnostics);
    set.merge(deduce_inter_class(db, set, focal, options.damping));
    return set;
}

}  // namespace apt
