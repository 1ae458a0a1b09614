#pragma once

#include "apt/llm.hpp"
#include "apt/metainfo.hpp"
#include "apt/prompts.hpp"
#include "apt/scope_graph.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace apt {

enum class Phase { complete, given, when, then };
enum class RelationProvenance { intra_llm, deduced_inheritance, deduced_sibling, deduced_interface };

std::string_view to_string(Phase phase);
std::string_view to_string(RelationProvenance provenance);
/// Case-insensitive; throws SchemaError.
Phase phase_from_string(std::string_view text);
RelationProvenance provenance_from_string(std::string_view text);

/// Tests of `related` can serve as a reference for testing `focal` in
/// `phase` (complete: all three phases).
struct PropertyRelation {
    Uri focal;
    Uri related;
    Phase phase = Phase::complete;
    std::string reason;
    double confidence = 0.5;
    bool external = false;
    RelationProvenance provenance = RelationProvenance::intra_llm;

    bool operator==(const PropertyRelation&) const = default;
};

/// At most one relation per (focal, related, phase), the most confident one.
/// A complete relation removes and blocks single-phase relations of the same
/// pair.
class PropertySet {
public:
    /// False when the relation was dropped as a duplicate or subsumed.
    bool add(PropertyRelation relation);
    void merge(const PropertySet& other);

    /// Complete first, then Given, When, Then; within a phase by confidence
    /// descending, then related Uri.
    std::vector<PropertyRelation> relations() const;
    std::size_t size() const { return relations_.size(); }
    bool empty() const { return relations_.empty(); }
    const PropertyRelation* find(const Uri& related, Phase phase) const;

    bool operator==(const PropertySet& other) const { return relations() == other.relations(); }

private:
    std::vector<PropertyRelation> relations_;
};

/// Table-2-shaped rows: phase, method, related, reason, confidence, external, provenance.
nlohmann::ordered_json to_json(const PropertySet& set, const MetainfoDatabase& db);
PropertySet property_set_from_json(const nlohmann::json& rows, const Uri& focal);

struct Damping {
    double inheritance = 0.9;
    double sibling = 0.85;
    double interface = 0.8;
};

struct IntraOptions {
    /// Token allowance for inherited method bodies in the class context;
    /// past it, inherited methods are listed by signature only.
    std::size_t inherited_budget = 4000;
};

/// Owner source followed by inherited methods of resolvable supertypes.
std::string class_context(const MetainfoDatabase& db, const ClassEntity& owner, const IntraOptions& options = {},
                          const Tokenizer& tokenizer = default_tokenizer());

/// Resolves a method named by the model relative to `owner`: `name(Types)`,
/// a bare unambiguous name, or `Class.method(Types)`; inherited methods are
/// found through supertypes. nullptr when nothing matches.
const MethodEntity* resolve_related_method(const MetainfoDatabase& db, const ClassEntity& owner,
                                           std::string_view name);

/// Turns the model's {"complete": [...], "gwt": [...]} answer into relations.
/// Unknown methods and the focal method itself are dropped into `diagnostics`.
PropertySet parse_property_answer(const nlohmann::json& answer, const MetainfoDatabase& db, const MethodEntity& focal,
                                  std::vector<std::string>* diagnostics = nullptr);

PropertySet analyze_intra_class(const MethodEntity& focal, const MetainfoDatabase& db, const StaticContext& sc,
                                LlmGateway& llm, const PromptLibrary& prompts, const IntraOptions& options = {},
                                std::vector<std::string>* diagnostics = nullptr);

/// One-hop deduction over parent, children, siblings and interface
/// co-implementors of the focal class: each intra relation whose related
/// method is shared with a related class yields the counterpart in that class
/// as a new, damped, external relation.
PropertySet deduce_inter_class(const MetainfoDatabase& db, const PropertySet& intra, const MethodEntity& focal,
                               const Damping& damping = {});

struct RetrievalOptions {
    Damping damping;
    IntraOptions intra;
};

PropertySet retrieve(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs, LlmGateway& llm,
                     const PromptLibrary& prompts, const RetrievalOptions& options = {},
                     std::vector<std::string>* diagnostics = nullptr);

}  // namespace apt
