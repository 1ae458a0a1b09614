#pragma once

// Random instance generators and brute-force oracles shared by the unit tests
// and the acceptance binary. Checks return the mismatches they found; an
// empty vector means the implementation agreed with the oracle.

#include "apt/generator.hpp"
#include "apt/iteration.hpp"
#include "apt/metainfo.hpp"
#include "apt/property.hpp"
#include "apt/scope_graph.hpp"
#include "apt/test_bundle.hpp"

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace apt::testing {

using Problems = std::vector<std::string>;

// ---- scope graphs ---------------------------------------------------------

/// "name@line outcome" per reference in source order, 1-based lines:
/// `def@L`, `import@L`, `wildcard@L` or `unresolved`.
std::vector<std::string> describe_references(const ScopeGraph& g);

/// Every file of the hand-annotated corpus against its manifest entry.
Problems check_scope_corpus(std::size_t* references_checked = nullptr);

// ---- rank -----------------------------------------------------------------

struct RankInstance {
    PropertySet set;
    std::set<Uri> with_bundles;
    TestBundleIndex index;
    std::size_t n = 1;
};

RankInstance random_rank_instance(std::mt19937& rng);

/// Greedy per-category walk in (category, -confidence, uri) order that keeps
/// room for every phase not yet represented.
std::vector<PropertyRelation> oracle_rank(const PropertySet& set, const std::set<Uri>& with_bundles, std::size_t n);

Problems check_rank(const RankInstance& instance, const RankedSet& got);

// ---- inter-class deduction ------------------------------------------------

struct DeductionCase {
    MetainfoDatabase db;
    const MethodEntity* focal = nullptr;
    PropertySet intra;
    // expected relations as (related uri, phase) -> (confidence, provenance)
    std::map<std::pair<Uri, Phase>, std::pair<double, RelationProvenance>> expected;
};

/// A random forest of classes and interfaces over a small method pool, a
/// random intra-class relation set for one focal method and the relations
/// the implication rules derive from it.
DeductionCase random_deduction_case(std::mt19937& rng, const Damping& damping = {});

Problems check_deduction(const DeductionCase& c, const PropertySet& got);

// ---- test bundle slicing --------------------------------------------------

struct SyntheticTestClass {
    std::string source;
    TestClassAnalysis analysis;
};

SyntheticTestClass synthesize_test_class(std::mt19937& rng);

/// Identifier-shaped words outside comments and string literals.
std::set<std::string> scan_tokens(std::string text);

/// Imports and members against the token-scan closure, verbatim lines, and
/// minimality of what was kept.
Problems check_slice(const SyntheticTestClass& s, const TestCaseAnalysis& c, const TestBundle& b);

// ---- iteration ------------------------------------------------------------

PropertyRelation complete_relation(const std::string& focal, const std::string& related, double confidence = 0.9);
TestBundle seed_bundle(const std::string& name);

/// In-memory pipeline: `graph` holds the relations, methods in `broken`
/// never produce a passing test, and admitted tests become bundles.
struct FakePipeline {
    std::map<Uri, PropertySet> graph;
    std::set<Uri> broken;
    TestBundleIndex seeds;
    VerdictKind failure = VerdictKind::compile_run_error;
    std::set<Uri> on_disk;
    std::vector<std::pair<Uri, bool>> calls;

    IterationHooks hooks();
};

struct GraphCase {
    FakePipeline pipeline;
    std::vector<Uri> focal;
    IterationOptions options;
};

GraphCase random_graph_case(std::mt19937& rng);

/// Breadth-first layers: round k covers the unbroken, uncovered methods with
/// a relation into what was covered after round k-1.
std::vector<std::set<Uri>> oracle_layers(const std::vector<Uri>& focal, const std::map<Uri, PropertySet>& graph,
                                         const std::set<Uri>& seeds, const std::set<Uri>& broken, int max_rounds);

/// Layers, the round bound, monotonicity and that every covered method is a
/// seed or has an admitted test.
Problems check_iteration(const GraphCase& c, const IterationReport& report);

}  // namespace apt::testing
