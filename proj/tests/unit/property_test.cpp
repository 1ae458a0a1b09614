#include "apt/error.hpp"
#include "apt/property.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

namespace apt {
namespace {

using Json = nlohmann::json;
using testing::fixture_path;

const MetainfoDatabase& redisson() {
    static const MetainfoDatabase db = index_repository(fixture_path("redisson_mini"), IndexConfig{});
    return db;
}

const ClassEntity& class_named(const MetainfoDatabase& db, const std::string& name) {
    auto hits = db.classes_named(name);
    EXPECT_EQ(hits.size(), 1u) << name;
    return *hits.at(0);
}

const MethodEntity& method_named(const MetainfoDatabase& db, const std::string& cls, const std::string& name) {
    auto hits = db.methods_of(class_named(db, cls).uri, name);
    EXPECT_EQ(hits.size(), 1u) << cls << "." << name;
    return *hits.at(0);
}

LlmGateway gateway(const std::string& marker, const Json& answer) {
    Json script = {{"rules", {{{"contains", marker}, {"response", answer.dump()}}}}};
    return LlmGateway(std::make_unique<ScriptedProvider>(std::move(script)), {});
}

// removeFirst of the queue fixture, answered the way the worked example lists it.
Json remove_first_answer() {
    return {{"complete",
             {{{"method", "poll()"}, {"reason", "same removal semantics"}, {"confidence", 0.90}, {"external", false}},
              {{"method", "remove()"}, {"reason", "delegates to removeFirst"}, {"confidence", 0.85}, {"external", false}},
              {{"method", "getFirst()"}, {"reason", "reads the same head"}, {"confidence", 0.80}, {"external", false}}}},
            {"gwt",
             {{{"phase", "Given"}, {"method", "initializeQueue(int)"}, {"reason", "sets up the queue"}, {"confidence", 0.80}},
              {{"phase", "When"}, {"method", "validateQueueState()"}, {"reason", "precondition check"}, {"confidence", 0.70}},
              {{"phase", "Then"}, {"method", "verifyRemoval(V)"}, {"reason", "checks the outcome"}, {"confidence", 0.85}}}}};
}

struct Row {
    Phase phase;
    std::string method;
    double confidence;
    bool operator==(const Row&) const = default;
};

std::vector<Row> rows(const MetainfoDatabase& db, const PropertySet& set) {
    std::vector<Row> out;
    for (auto& r : set.relations()) out.push_back({r.phase, method_reference(db, *db.find_method(r.related)), r.confidence});
    return out;
}

TEST(Property, QueueRemoveFirstIntraAnalysis) {
    const auto& db = redisson();
    const auto& focal = method_named(db, "RedissonQueue", "removeFirst");
    auto llm = gateway("FOCAL: removeFirst()", remove_first_answer());
    auto prompts = PromptLibrary::embedded();
    ScopeGraphCache graphs(fixture_path("redisson_mini"));
    std::vector<std::string> diagnostics;
    auto set = retrieve(focal, db, graphs, llm, prompts, {}, &diagnostics);

    std::vector<Row> expected = {
        {Phase::complete, "RedissonQueue.poll()", 0.90},
        {Phase::complete, "RedissonQueue.remove()", 0.85},
        {Phase::complete, "RedissonQueue.getFirst()", 0.80},
        {Phase::given, "RedissonQueue.initializeQueue(int)", 0.80},
        {Phase::when, "RedissonQueue.validateQueueState()", 0.70},
        {Phase::then, "RedissonQueue.verifyRemoval(V)", 0.85},
    };
    EXPECT_EQ(rows(db, set), expected);
    EXPECT_TRUE(diagnostics.empty());
    for (auto& r : set.relations()) {
        EXPECT_FALSE(r.external);
        EXPECT_EQ(r.provenance, RelationProvenance::intra_llm);
        EXPECT_EQ(r.focal, focal.uri);
    }
    // the queue has no relatives, nothing is deduced
    EXPECT_TRUE(deduce_inter_class(db, set, focal).empty());

    auto json = to_json(set, db);
    EXPECT_EQ(json[0]["phase"], "Complete");
    EXPECT_EQ(json[0]["method"], "RedissonQueue.poll()");
    EXPECT_EQ(json[5]["phase"], "Then");
    EXPECT_EQ(property_set_from_json(Json::parse(json.dump()), focal.uri), set);
}

TEST(Property, AnswerCleanup) {
    const auto& db = redisson();
    const auto& focal = method_named(db, "RedissonQueue", "removeFirst");
    Json answer = {{"complete",
                    {{{"method", "poll"}, {"confidence", 1.7}},
                     {{"method", "removeFirst()"}, {"confidence", 0.9}},
                     {{"method", "noSuchThing()"}, {"confidence", 0.9}},
                     {{"reason", "no method"}}}},
                   {"gwt",
                    {{{"phase", "Then"}, {"method", "poll()"}, {"confidence", 0.99}},
                     {{"phase", "when"}, {"method", "size()"}},
                     {{"phase", "When"}, {"method", "size()"}, {"confidence", 0.6}},
                     {{"phase", "Later"}, {"method", "offer(V)"}, {"confidence", 0.6}},
                     {{"phase", "Complete"}, {"method", "offer(V)"}, {"confidence", 0.6}}}}};
    std::vector<std::string> diagnostics;
    auto set = parse_property_answer(answer, db, focal, &diagnostics);
    std::vector<Row> expected = {
        {Phase::complete, "RedissonQueue.poll()", 1.0},   // clamped; the Then entry is subsumed
        {Phase::when, "RedissonQueue.size()", 0.6},       // missing confidence 0.5 loses to 0.6
    };
    EXPECT_EQ(rows(db, set), expected);
    EXPECT_EQ(diagnostics.size(), 5u);
}

TEST(Property, CompleteSubsumesSinglePhases) {
    PropertySet set;
    Uri f("F"), r("R");
    EXPECT_TRUE(set.add({f, r, Phase::given, "", 0.9}));
    EXPECT_TRUE(set.add({f, r, Phase::then, "", 0.4}));
    EXPECT_FALSE(set.add({f, r, Phase::given, "", 0.5}));
    EXPECT_TRUE(set.add({f, r, Phase::complete, "", 0.3}));
    EXPECT_EQ(set.size(), 1u);
    EXPECT_FALSE(set.add({f, r, Phase::when, "", 0.99}));
    EXPECT_TRUE(set.add({f, r, Phase::complete, "", 0.6}));
    ASSERT_EQ(set.size(), 1u);
    EXPECT_DOUBLE_EQ(set.relations()[0].confidence, 0.6);
}

TEST(Property, SiblingDeductionAtomicLongToDouble) {
    const auto& db = redisson();
    const auto& focal = method_named(db, "RedissonAtomicLong", "incrementAndGet");
    Json answer = {{"complete", {{{"method", "getAndDelete()"}, {"reason", "r1"}, {"confidence", 0.9}}}},
                   {"gwt",
                    {{{"phase", "When"}, {"method", "getAndSet(long)"}, {"reason", "r2"}, {"confidence", 0.8}},
                     {{"phase", "Given"}, {"method", "set(long)"}, {"reason", "r3"}, {"confidence", 0.6}},
                     {{"phase", "Given"}, {"method", "isExists()"}, {"reason", "r4"}, {"confidence", 0.5}}}}};
    auto llm = gateway("FOCAL: incrementAndGet()", answer);
    auto prompts = PromptLibrary::embedded();
    ScopeGraphCache graphs(fixture_path("redisson_mini"));
    auto set = retrieve(focal, db, graphs, llm, prompts);

    const auto& dbl = class_named(db, "RedissonAtomicDouble");
    auto shared = shared_methods(db, focal.owner, dbl.uri);
    EXPECT_TRUE(shared.contains("getAndSet/1(#num)"));
    EXPECT_TRUE(shared.contains("getAndDelete/0()"));

    std::vector<Row> deduced;
    for (auto& r : set.relations()) {
        if (r.provenance == RelationProvenance::intra_llm) continue;
        EXPECT_EQ(r.provenance, RelationProvenance::deduced_sibling);
        EXPECT_TRUE(r.external);
        deduced.push_back({r.phase, method_reference(db, *db.find_method(r.related)), r.confidence});
    }
    // hand-derived: confidence x 0.85; the inherited isExists is not carried over
    ASSERT_EQ(deduced.size(), 3u);
    EXPECT_EQ(deduced[0].method, "RedissonAtomicDouble.getAndDelete()");
    EXPECT_EQ(deduced[0].phase, Phase::complete);
    EXPECT_NEAR(deduced[0].confidence, 0.765, 1e-12);
    EXPECT_EQ(deduced[1].method, "RedissonAtomicDouble.set(double)");
    EXPECT_EQ(deduced[1].phase, Phase::given);
    EXPECT_NEAR(deduced[1].confidence, 0.51, 1e-12);
    EXPECT_EQ(deduced[2].method, "RedissonAtomicDouble.getAndSet(double)");
    EXPECT_EQ(deduced[2].phase, Phase::when);
    EXPECT_NEAR(deduced[2].confidence, 0.68, 1e-12);
    EXPECT_EQ(set.find(method_named(db, "RedissonAtomicDouble", "getAndSet").uri, Phase::when)->reason, "r2");
    // the inherited method stays external and intra
    auto* inherited = set.find(method_named(db, "RedissonExpirable", "isExists").uri, Phase::given);
    ASSERT_NE(inherited, nullptr);
    EXPECT_TRUE(inherited->external);
}

TEST(Property, ClassContextAppendsInheritedMethods) {
    const auto& db = redisson();
    const auto& owner = class_named(db, "RedissonAtomicLong");
    auto full = class_context(db, owner);
    EXPECT_EQ(full.rfind(owner.original_string, 0), 0u);
    EXPECT_NE(full.find("// inherited from RedissonExpirable\npublic boolean isExists() {\n    return true;\n}"),
              std::string::npos);
    auto tight = class_context(db, owner, IntraOptions{0});
    EXPECT_NE(tight.find("public boolean isExists();"), std::string::npos);
    EXPECT_EQ(tight.find("return true;"), std::string::npos);
}

TEST(Property, ResolvesRelatedNames) {
    const auto& db = redisson();
    const auto& owner = class_named(db, "RedissonAtomicLong");
    EXPECT_EQ(resolve_related_method(db, owner, "getAndSet(long)")->name, "getAndSet");
    EXPECT_EQ(resolve_related_method(db, owner, "getAndSet(long newValue)")->name, "getAndSet");
    EXPECT_EQ(resolve_related_method(db, owner, "getAndSet(int)"), nullptr);
    EXPECT_EQ(resolve_related_method(db, owner, "RedissonExpirable.isExists()")->owner,
              class_named(db, "RedissonExpirable").uri);
    EXPECT_EQ(resolve_related_method(db, owner, "isExists")->name, "isExists");
    EXPECT_EQ(resolve_related_method(db, owner, "RedissonAtomicDouble.set(double)")->owner,
              class_named(db, "RedissonAtomicDouble").uri);
    EXPECT_EQ(resolve_related_method(db, owner, "("), nullptr);
}

TEST(Property, DeductionMatchesBruteForceOnRandomForests) {
    std::mt19937 rng(20240611);
    const Damping damping;
    int nonempty = 0;
    for (int round = 0; round < 500; ++round) {
        auto c = testing::random_deduction_case(rng, damping);
        auto problems = testing::check_deduction(c, deduce_inter_class(c.db, c.intra, *c.focal, damping));
        ASSERT_TRUE(problems.empty()) << "round " << round << ": " << problems.front();
        if (!c.expected.empty()) ++nonempty;
    }
    EXPECT_GT(nonempty, 100);
}

}  // namespace
}  // namespace apt
