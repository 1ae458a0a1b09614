#include "apt/error.hpp"
#include "apt/metainfo.hpp"
#include "apt/scope_graph.hpp"
#include "apt/util.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <random>
#include <set>

namespace apt {
namespace {

using testing::fixture_path;
using testing::TempDir;

ScopeGraph corpus_graph(const std::string& file) {
    auto path = fixture_path("scope_corpus/" + file);
    return build_scope_graph(file, read_file(path));
}

std::vector<NodeId> refs_in_source_order(const ScopeGraph& g) {
    auto refs = g.nodes_of_kind(ScopeNodeKind::reference);
    std::stable_sort(refs.begin(), refs.end(),
                     [&](NodeId a, NodeId b) { return g.node(a).span.start_byte < g.node(b).span.start_byte; });
    return refs;
}

TEST(ScopeGraph, HandAnnotatedCorpus) {
    auto manifest = nlohmann::json::parse(read_file(fixture_path("scope_corpus/manifest.json")));
    ASSERT_GE(manifest["files"].size(), 15u);
    for (auto& entry : manifest["files"]) {
        auto file = entry["file"].get<std::string>();
        SCOPED_TRACE(file);
        auto g = corpus_graph(file);
        EXPECT_EQ(g.count(ScopeNodeKind::scope), entry["scopes"].get<std::size_t>());
        EXPECT_EQ(g.count(ScopeNodeKind::definition), entry["definitions"].get<std::size_t>());
        EXPECT_EQ(g.count(ScopeNodeKind::import), entry["imports"].get<std::size_t>());

        auto actual = testing::describe_references(g);
        EXPECT_EQ(actual, entry["refs"].get<std::vector<std::string>>());

        // Edge counts follow from the node counts and the outcomes above.
        std::size_t to_def = 0, to_import = 0;
        for (auto& s : actual) {
            if (s.find(" def@") != std::string::npos) ++to_def;
            if (s.find(" import@") != std::string::npos || s.find(" wildcard@") != std::string::npos) ++to_import;
        }
        EXPECT_EQ(g.count(EdgeKind::scope_to_scope), g.count(ScopeNodeKind::scope) - 1);
        EXPECT_EQ(g.count(EdgeKind::def_to_scope), g.count(ScopeNodeKind::definition));
        EXPECT_EQ(g.count(EdgeKind::import_to_scope), g.count(ScopeNodeKind::import));
        EXPECT_EQ(g.count(EdgeKind::ref_to_def), to_def);
        EXPECT_EQ(g.count(EdgeKind::ref_to_import), to_import);
    }
}

TEST(ScopeGraph, EmptyClassHasNoReferences) {
    auto g = corpus_graph("Empty.java");
    EXPECT_EQ(g.count(ScopeNodeKind::reference), 0u);
    EXPECT_TRUE(unresolved_references(g, g.node(g.root()).span).empty());
    auto defs = g.definitions_in(g.root());
    ASSERT_EQ(defs.size(), 1u);
    EXPECT_EQ(g.node(defs[0]).name, "Empty");
    EXPECT_EQ(g.node(defs[0]).def_kind, DefKind::class_);
}

TEST(ScopeGraph, ParseErrorNamesFile) {
    try {
        build_scope_graph("Broken.java", "class Broken { void f( { }");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("Broken.java"), std::string::npos);
    }
}

TEST(ScopeGraph, ResolutionIsPureAndBuildIsDeterministic) {
    for (auto file : {"Lambdas.java", "Imports.java", "Generics.java"}) {
        auto a = corpus_graph(file);
        auto b = corpus_graph(file);
        ASSERT_EQ(a.nodes().size(), b.nodes().size());
        EXPECT_EQ(a.edges(), b.edges());
        for (NodeId r : a.nodes_of_kind(ScopeNodeKind::reference)) {
            EXPECT_EQ(resolve_reference(a, r), resolve_reference(a, r));
            EXPECT_EQ(resolve_reference(a, r), resolve_reference(b, r));
        }
        EXPECT_EQ(a.to_dot(), b.to_dot());
    }
}

TEST(ScopeGraph, UnresolvedIsReferencesMinusResolutionEdges) {
    for (auto& entry : std::filesystem::directory_iterator(fixture_path("scope_corpus"))) {
        if (entry.path().extension() != ".java") continue;
        auto g = corpus_graph(entry.path().filename().string());
        std::set<NodeId> resolved;
        for (auto& e : g.edges()) {
            if (e.kind == EdgeKind::ref_to_def || e.kind == EdgeKind::ref_to_import) resolved.insert(e.from);
        }
        for (NodeId scope : g.nodes_of_kind(ScopeNodeKind::scope)) {
            const auto& block = g.node(scope).span;
            std::vector<NodeId> expected;
            for (NodeId r : refs_in_source_order(g)) {
                if (block.contains(g.node(r).span) && !resolved.count(r)) expected.push_back(r);
            }
            EXPECT_EQ(unresolved_references(g, block), expected) << entry.path();
        }
    }
}

TEST(ScopeGraph, DotDumpLabelsEveryNode) {
    auto g = corpus_graph("ThisAccess.java");
    auto dot = g.to_dot();
    EXPECT_EQ(dot.rfind("digraph \"ThisAccess.java\" {", 0), 0u);
    EXPECT_NE(dot.find("def:count:2:17-2:22"), std::string::npos) << dot;
    EXPECT_NE(dot.find("ref:helper:6:9-6:15"), std::string::npos) << dot;
    std::size_t arrows = 0;
    for (std::size_t p = dot.find("->"); p != std::string::npos; p = dot.find("->", p + 2)) ++arrows;
    EXPECT_EQ(arrows, g.edges().size());
}

// Nested blocks each optionally redeclaring `v`, with a use at the bottom.
// The use must bind to the innermost declaration that precedes it.
TEST(ScopeGraph, ShadowingProperty) {
    std::mt19937 rng(7);
    for (int round = 0; round < 80; ++round) {
        int depth = 1 + static_cast<int>(rng() % 6);
        bool field = rng() % 2;
        std::string src = "class S {\n";
        int line = 2;
        int expected = field ? line : -1;
        if (field) {
            src += "  int v;\n";
            ++line;
        }
        src += "  void m(int w) {\n";
        ++line;
        for (int d = 0; d < depth; ++d) {
            src += "{\n";
            ++line;
            if (rng() % 2) {
                src += "int v = " + std::to_string(d) + ";\n";
                expected = line;
                ++line;
            }
        }
        src += "w = v;\n";
        int use_line = line;
        for (int d = 0; d < depth; ++d) src += "}\n";
        // a later sibling declaration must not capture the use
        src += "int v = 9;\n  }\n}\n";

        auto g = build_scope_graph("S.java", src);
        bool found = false;
        for (NodeId r : g.nodes_of_kind(ScopeNodeKind::reference)) {
            const auto& n = g.node(r);
            if (n.name != "v" || static_cast<int>(n.span.start_row) + 1 != use_line) continue;
            found = true;
            auto res = resolve_reference(g, r);
            if (expected < 0) {
                EXPECT_EQ(res.outcome, ResolutionResult::Outcome::unresolved) << src;
            } else {
                ASSERT_EQ(res.outcome, ResolutionResult::Outcome::local_def) << src;
                EXPECT_EQ(static_cast<int>(g.node(res.target).span.start_row) + 1, expected) << src;
            }
        }
        EXPECT_TRUE(found) << src;
    }
}

// Adding a declaration or an import can only shrink the unresolved set.
TEST(ScopeGraph, AddingDeclarationsIsMonotone) {
    const std::vector<std::string> names = {"alpha", "beta", "Gamma", "delta", "Eps", "zeta"};
    std::mt19937 rng(11);
    auto unresolved_names = [](const std::string& src) {
        auto g = build_scope_graph("M.java", src);
        std::multiset<std::string> out;
        for (NodeId r : unresolved_references(g, g.node(g.root()).span)) out.insert(g.node(r).name);
        return out;
    };
    for (int round = 0; round < 60; ++round) {
        std::string body;
        for (int i = 0; i < 5; ++i) {
            const auto& n = names[rng() % names.size()];
            body += std::isupper(static_cast<unsigned char>(n[0])) ? "    " + n + " t" + std::to_string(i) + " = null;\n"
                                                                    : "    " + n + "();\n";
        }
        auto base = "class M {\n  void run() {\n" + body + "  }\n}\n";
        const auto& extra = names[rng() % names.size()];
        std::string grown;
        if (rng() % 2) {
            grown = "import p.q." + extra + ";\n" + base;
        } else {
            grown = "class M {\n  void " + extra + "() {}\n  void run() {\n" + body + "  }\n}\n";
        }
        auto before = unresolved_names(base);
        auto after = unresolved_names(grown);
        EXPECT_TRUE(std::includes(before.begin(), before.end(), after.begin(), after.end())) << grown;
    }
}

// ---------------------------------------------------------------------------
// Static context
// ---------------------------------------------------------------------------

const MetainfoDatabase& redisson() {
    static const MetainfoDatabase db = index_repository(fixture_path("redisson_mini"), IndexConfig{});
    return db;
}

const MethodEntity& method_named(const MetainfoDatabase& db, const std::string& owner, const std::string& name) {
    for (auto* m : db.methods_named(name)) {
        if (db.find_class(m->owner)->name == owner) return *m;
    }
    throw std::runtime_error("no method " + owner + "." + name);
}

TEST(StaticContext, LongAdderResetHandOracle) {
    const auto& db = redisson();
    ScopeGraphCache graphs(fixture_path("redisson_mini"));
    auto sc = resolve_ref(method_named(db, "RedissonLongAdder", "reset"), db, graphs);

    struct Expected {
        std::string name;
        EntityKind kind;
        ContextProvenance provenance;
    };
    const std::vector<Expected> expected = {
        {"RFuture", EntityKind::class_, ContextProvenance::import},
        {"getServiceManager", EntityKind::method, ContextProvenance::unresolved},
        {"RSemaphore", EntityKind::class_, ContextProvenance::unresolved},
        {"getSemaphore", EntityKind::method, ContextProvenance::member},
        {"topic", EntityKind::field, ContextProvenance::member},
        {"CLEAR_MSG", EntityKind::field, ContextProvenance::member},
        {"CompletableFutureWrapper", EntityKind::class_, ContextProvenance::unresolved},
    };
    ASSERT_EQ(sc.entries.size(), expected.size()) << sc.render();
    for (std::size_t i = 0; i < expected.size(); ++i) {
        SCOPED_TRACE(expected[i].name);
        EXPECT_EQ(sc.entries[i].name, expected[i].name);
        EXPECT_EQ(sc.entries[i].kind, expected[i].kind);
        EXPECT_EQ(sc.entries[i].provenance, expected[i].provenance);
        EXPECT_FALSE(sc.entries[i].ambiguous);
        EXPECT_FALSE(sc.entries[i].rendering.empty());
    }
    EXPECT_TRUE(sc.unknown.empty()) << join(sc.unknown, ",");

    auto* gsm = sc.find("getServiceManager");
    ASSERT_EQ(gsm->targets.size(), 1u);
    EXPECT_NE(gsm->targets[0].find("RedissonObject.java.RedissonObject."), std::string::npos);
    EXPECT_NE(gsm->rendering.find("// member of org.redisson.RedissonObject"), std::string::npos);
    EXPECT_NE(sc.find("topic")->rendering.find("private final RTopic topic;"), std::string::npos);
    EXPECT_NE(sc.find("RSemaphore")->rendering.find("// org.redisson.RSemaphore"), std::string::npos);

    // builtins and JDK imports never show up
    EXPECT_EQ(sc.find("String"), nullptr);
    EXPECT_EQ(sc.find("CompletionStage"), nullptr);
    EXPECT_EQ(sc.find("semaphore"), nullptr);
}

TEST(StaticContext, AmbiguityAndAncestorPreference) {
    TempDir repo;
    repo.write("src/main/java/p/A.java", "package p;\npublic class A {\n  public void ping() {}\n}\n");
    repo.write("src/main/java/p/B.java", "package p;\npublic class B {\n  public void ping() {}\n}\n");
    repo.write("src/main/java/p/C.java",
               "package p;\npublic class C {\n  void run() {\n    ping();\n    nothingKnown();\n  }\n}\n");
    repo.write("src/main/java/p/D.java", "package p;\npublic class D extends A {\n  void run() {\n    ping();\n  }\n}\n");
    auto db = index_repository(repo.path(), IndexConfig{});
    ScopeGraphCache graphs(repo.path());

    auto c = resolve_ref(method_named(db, "C", "run"), db, graphs);
    ASSERT_NE(c.find("ping"), nullptr);
    EXPECT_TRUE(c.find("ping")->ambiguous);
    EXPECT_EQ(c.find("ping")->targets.size(), 2u);
    EXPECT_EQ(c.unknown, std::vector<std::string>{"nothingKnown"});

    auto d = resolve_ref(method_named(db, "D", "run"), db, graphs);
    ASSERT_NE(d.find("ping"), nullptr);
    EXPECT_FALSE(d.find("ping")->ambiguous);
    ASSERT_EQ(d.find("ping")->targets.size(), 1u);
    EXPECT_NE(d.find("ping")->targets[0].find("A.java.A."), std::string::npos);
}

TEST(StaticContext, MergeDeduplicates) {
    const auto& db = redisson();
    ScopeGraphCache graphs(fixture_path("redisson_mini"));
    auto reset = resolve_ref(method_named(db, "RedissonLongAdder", "reset"), db, graphs);
    auto merged = reset;
    merged.merge(reset);
    EXPECT_EQ(merged, reset);
    EXPECT_EQ(&graphs.get("src/main/java/org/redisson/RedissonLongAdder.java"),
              &graphs.get("src/main/java/org/redisson/RedissonLongAdder.java"));
}

}  // namespace
}  // namespace apt
