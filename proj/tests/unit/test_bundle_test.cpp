#include "apt/error.hpp"
#include "apt/test_bundle.hpp"
#include "apt/util.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <set>

namespace apt {
namespace {

using Json = nlohmann::json;
using testing::fixture_path;
using testing::TempDir;

const MetainfoDatabase& redisson() {
    static const MetainfoDatabase db = index_repository(fixture_path("redisson_mini"), IndexConfig{});
    return db;
}

const ClassEntity& class_named(const MetainfoDatabase& db, const std::string& name) {
    auto hits = db.classes_named(name);
    EXPECT_EQ(hits.size(), 1u) << name;
    return *hits.at(0);
}

const std::string kJCachePath = "src/test/java/org/redisson/jcache/JCacheTest.java";

std::string jcache_source() { return read_file(fixture_path("redisson_mini") / kJCachePath); }

// The analysis of Fig. 7, as the model would answer it.
Json jcache_reply() {
    return {{"file_path", kJCachePath},
            {"name", "JCacheTest"},
            {"dependencies", Json::array()},
            {"class_members", {{"variables", {"cache"}}, {"methods", Json::array()}, {"nested_classes", {"ExpiredListener"}}}},
            {"fixtures", {"beforeEach"}},
            {"test_cases",
             {{{"name", "testClose"},
               {"primary_tested", {"Cache.close()"}},
               {"external_dependencies", Json::array()},
               {"fixtures_used", {"beforeEach"}},
               {"project_specific_resources", {"TestUtil.logTestResult(String, int)"}}},
              {{"name", "testExpiredListener"},
               {"primary_tested", {"Ghost.method()"}},
               {"external_dependencies", {"java.util.concurrent.CountDownLatch"}},
               {"fixtures_used", Json::array()},
               {"project_specific_resources", Json::array()}}}}};
}

LlmGateway gateway(Json script) { return LlmGateway(std::make_unique<ScriptedProvider>(std::move(script)), {}); }

Json reply_script(const std::string& marker, std::vector<Json> replies) {
    Json responses = Json::array();
    for (auto& r : replies) responses.push_back(r.is_string() ? r : Json(r.dump()));
    return {{"rules", {{{"contains", marker}, {"responses", responses}}}}};
}

TEST(TestBundle, JCacheAnalysisMatchesFigure) {
    const auto& db = redisson();
    auto llm = gateway(reply_script("TEST_CLASS: JCacheTest", {jcache_reply()}));
    auto prompts = PromptLibrary::embedded();
    auto a = analyze_test_class(db, class_named(db, "JCacheTest"), jcache_source(), llm, prompts);

    EXPECT_EQ(a.file_path, kJCachePath);
    EXPECT_EQ(a.name, "JCacheTest");
    EXPECT_EQ(a.fixtures, std::vector<std::string>{"beforeEach"});
    EXPECT_EQ(a.class_members.nested_classes, std::vector<std::string>{"ExpiredListener"});
    EXPECT_EQ(a.class_members.variables, (std::vector<std::string>{"cache", "expired", "latch"}));
    ASSERT_EQ(a.test_cases.size(), 2u);
    const auto& close = a.test_cases[0];
    EXPECT_EQ(close.name, "testClose");
    EXPECT_EQ(close.primary_tested, std::vector<std::string>{"Cache.close()"});
    EXPECT_EQ(close.fixtures_used, std::vector<std::string>{"beforeEach"});
    EXPECT_EQ(close.project_specific_resources, std::vector<std::string>{"TestUtil.logTestResult(String, int)"});
    EXPECT_TRUE(close.unresolved.empty());
    EXPECT_EQ(a.test_cases[1].unresolved, std::vector<std::string>{"Ghost.method()"});

    // Fig. 7 field names are the persisted contract.
    auto j = to_json(a);
    for (auto key : {"file_path", "name", "dependencies", "class_members", "fixtures", "test_cases"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    for (auto key : {"primary_tested", "external_dependencies", "fixtures_used", "project_specific_resources"}) {
        EXPECT_TRUE(j["test_cases"][0].contains(key)) << key;
    }
    EXPECT_EQ(analysis_from_json(Json::parse(j.dump())), a);
}

TEST(TestBundle, ClassesUnderTestFollowNameImportsAndAncestors) {
    const auto& db = redisson();
    std::vector<std::string> names;
    for (auto* c : classes_under_test(db, class_named(db, "JCacheTest"))) names.push_back(c->name);
    EXPECT_EQ(names, (std::vector<std::string>{"Cache", "JCache"}));
}

TEST(TestBundle, EmptyTestClassNeedsNoModel) {
    TempDir repo;
    repo.write("src/test/java/p/EmptyTest.java", "package p;\nimport org.junit.jupiter.api.Test;\npublic class EmptyTest {\n  @Test\n  void t() {}\n}\n");
    auto db = index_repository(repo.path(), IndexConfig{});
    const std::string source = "package p;\npublic class EmptyTest {\n  private int x;\n}\n";
    auto provider = std::make_unique<ScriptedProvider>(Json::object());
    auto* raw = provider.get();
    LlmGateway llm(std::move(provider), {});
    auto a = analyze_test_class(db, class_named(db, "EmptyTest"), source, llm, PromptLibrary::embedded());
    EXPECT_TRUE(a.test_cases.empty());
    EXPECT_EQ(raw->calls(), 0u);
}

TEST(TestBundle, InvalidAnswerIsRepromptedOnce) {
    const auto& db = redisson();
    auto bad = jcache_reply();
    bad["test_cases"][0]["fixtures_used"] = {"setUpEverything"};
    bad["test_cases"][0]["primary_tested"] = {"close"};
    auto provider = std::make_unique<ScriptedProvider>(reply_script("TEST_CLASS: JCacheTest", {bad, jcache_reply()}));
    auto* raw = provider.get();
    LlmGateway llm(std::move(provider), {});
    auto a = analyze_test_class(db, class_named(db, "JCacheTest"), jcache_source(), llm, PromptLibrary::embedded());
    EXPECT_EQ(a.test_cases[0].fixtures_used, std::vector<std::string>{"beforeEach"});
    EXPECT_EQ(raw->calls(), 2u);

    auto always_bad = gateway(reply_script("TEST_CLASS: JCacheTest", {bad}));
    EXPECT_THROW(analyze_test_class(db, class_named(db, "JCacheTest"), jcache_source(), always_bad,
                                    PromptLibrary::embedded()),
                 MalformedOutput);
}

TEST(TestBundle, MissingFixturesUsedDefaultsToAllFixtures) {
    const auto& db = redisson();
    auto reply = jcache_reply();
    reply["test_cases"][0].erase("fixtures_used");
    auto llm = gateway(reply_script("TEST_CLASS: JCacheTest", {reply}));
    auto a = analyze_test_class(db, class_named(db, "JCacheTest"), jcache_source(), llm, PromptLibrary::embedded());
    EXPECT_EQ(a.test_cases[0].fixtures_used, std::vector<std::string>{"beforeEach"});
    EXPECT_TRUE(a.test_cases[1].fixtures_used.empty());
}

TEST(TestBundle, ResolvesMethodReferences) {
    const auto& db = redisson();
    auto* close = resolve_method_reference(db, "Cache.close()");
    ASSERT_NE(close, nullptr);
    EXPECT_EQ(db.find_class(close->owner)->name, "Cache");
    ASSERT_NE(resolve_method_reference(db, "TestUtil.logTestResult(String, int)"), nullptr);
    EXPECT_NE(resolve_method_reference(db, "RedissonAtomicLong.getAndSet(long)"), nullptr);
    EXPECT_EQ(resolve_method_reference(db, "RedissonAtomicLong.getAndSet(String)"), nullptr);
    EXPECT_EQ(resolve_method_reference(db, "Ghost.method()"), nullptr);
    EXPECT_EQ(resolve_method_reference(db, "close()"), nullptr);
    // inherited through the parent chain
    auto* inherited = resolve_method_reference(db, "RedissonLongAdder.getServiceManager()");
    ASSERT_NE(inherited, nullptr);
    EXPECT_EQ(db.find_class(inherited->owner)->name, "RedissonObject");
}

TEST(TestBundle, TestCloseBundleHandDerived) {
    const auto& db = redisson();
    auto llm = gateway(reply_script("TEST_CLASS: JCacheTest", {jcache_reply()}));
    auto a = analyze_test_class(db, class_named(db, "JCacheTest"), jcache_source(), llm, PromptLibrary::embedded());
    auto b = extract_bundle(a, "testClose", jcache_source());

    ASSERT_EQ(b.fixtures.size(), 1u);
    EXPECT_NE(b.fixtures[0].find("public void beforeEach()"), std::string::npos);
    EXPECT_EQ(b.imports, (std::vector<std::string>{
                             "import static org.junit.jupiter.api.Assertions.assertTrue;",
                             "import org.junit.jupiter.api.BeforeEach;",
                             "import org.junit.jupiter.api.Test;",
                             "import org.redisson.TestUtil;",
                         }));
    EXPECT_EQ(b.class_members, std::vector<std::string>{"    private Cache<String, String> cache;"});
    EXPECT_EQ(b.test_case.rfind("    @Test\n    public void testClose() {", 0), 0u) << b.test_case;

    auto listener = extract_bundle(a, "testExpiredListener", jcache_source());
    EXPECT_TRUE(listener.fixtures.empty());
    ASSERT_EQ(listener.class_members.size(), 3u);  // expired, latch, ExpiredListener
    EXPECT_NE(listener.class_members[2].find("class ExpiredListener"), std::string::npos);

    EXPECT_THROW(extract_bundle(a, "testNothing", jcache_source()), NotFoundError);
}

// ---------------------------------------------------------------------------
// Randomized slicing against a token-scan oracle
// ---------------------------------------------------------------------------

TEST(TestBundle, RandomSlicesMatchTokenScanOracle) {
    std::mt19937 rng(2024);
    for (int round = 0; round < 120; ++round) {
        auto s = testing::synthesize_test_class(rng);
        for (auto& c : s.analysis.test_cases) {
            auto problems = testing::check_slice(s, c, extract_bundle(s.analysis, c.name, s.source));
            ASSERT_TRUE(problems.empty()) << s.source << problems.front();
        }
    }
}

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

TEST(TestBundleIndex, EmptyAnalysesGiveEmptyIndex) {
    auto index = build_bundle_index({}, redisson(), fixture_path("redisson_mini"));
    EXPECT_TRUE(index.empty());
}

TEST(TestBundleIndex, MapsCasesToTestedMethods) {
    const auto& db = redisson();
    auto llm = gateway(reply_script("TEST_CLASS: JCacheTest", {jcache_reply()}));
    auto a = analyze_test_class(db, class_named(db, "JCacheTest"), jcache_source(), llm, PromptLibrary::embedded());
    auto index = build_bundle_index({a}, db, fixture_path("redisson_mini"));
    auto* close = resolve_method_reference(db, "Cache.close()");
    ASSERT_EQ(index.size(), 1u);
    ASSERT_EQ(index.bundles_for(close->uri).size(), 1u);
    EXPECT_EQ(index.bundles_for(close->uri)[0].case_name, "testClose");
    ASSERT_EQ(index.diagnostics().size(), 1u);
    EXPECT_NE(index.diagnostics()[0].message.find("Ghost.method()"), std::string::npos);

    // a second test class exercising the same method
    auto twin = a;
    twin.test_cases.erase(twin.test_cases.begin() + 1);
    twin.name = "JCacheTest";
    TempDir copy;
    copy.write("other/JCacheTest.java", jcache_source());
    twin.file_path = "other/JCacheTest.java";
    auto both = build_bundle_index({a}, db, fixture_path("redisson_mini"));
    auto more = build_bundle_index({twin}, db, copy.path());
    TestBundleIndex merged = both;
    for (auto& [uri, list] : more.by_method()) {
        for (auto& bundle : list) merged.add(uri, bundle);
    }
    EXPECT_EQ(merged.bundles_for(close->uri).size(), 2u);
}

Json queue_reply(const std::string& case_name, const std::string& tested) {
    return {{"name", case_name}, {"primary_tested", {tested}}, {"fixtures_used", Json::array()}};
}

TEST(TestBundleIndex, RepositoryRunUsesCacheAndIsJobIndependent) {
    TempDir out;
    Json queue = {{"test_cases",
                   {queue_reply("testPoll", "RedissonQueue.poll()"), queue_reply("testPollEmpty", "RedissonQueue.poll()"),
                    queue_reply("testRemove", "RedissonQueue.remove()"),
                    queue_reply("testGetFirst", "RedissonQueue.getFirst()"),
                    queue_reply("testInitializeQueue", "RedissonQueue.initializeQueue(int)"),
                    queue_reply("testValidateQueueState", "RedissonQueue.validateQueueState()")}}};
    Json script = {{"rules",
                    {{{"contains", "TEST_CLASS: JCacheTest"}, {"response", jcache_reply().dump()}},
                     {{"contains", "TEST_CLASS: RedissonQueueTest"}, {"response", queue.dump()}}}}};
    const auto& db = redisson();
    auto root = fixture_path("redisson_mini");
    auto prompts = PromptLibrary::embedded();

    auto first_llm = gateway(script);
    auto first = analyze_repository_tests(db, root, first_llm, prompts, out.path() / "analysis", 1);
    ASSERT_TRUE(first.failures.empty()) << first.failures[0].message;
    ASSERT_EQ(first.analyses.size(), 3u);  // TestUtil lives under the test root: analyzed, no cases
    EXPECT_EQ(first.analyses[0].name, "TestUtil");
    EXPECT_TRUE(first.analyses[0].test_cases.empty());
    EXPECT_EQ(first.cache_hits, 0u);

    auto parallel_llm = gateway(script);
    auto parallel = analyze_repository_tests(db, root, parallel_llm, prompts, std::nullopt, 3);
    EXPECT_EQ(parallel.analyses, first.analyses);

    auto provider = std::make_unique<ScriptedProvider>(Json::object());
    auto* raw = provider.get();
    LlmGateway cached_llm(std::move(provider), {});
    auto cached = analyze_repository_tests(db, root, cached_llm, prompts, out.path() / "analysis", 1);
    EXPECT_EQ(cached.cache_hits, 3u);
    EXPECT_EQ(raw->calls(), 0u);
    EXPECT_EQ(cached.analyses, first.analyses);

    auto index = build_bundle_index(first.analyses, db, root);
    auto* poll = resolve_method_reference(db, "RedissonQueue.poll()");
    EXPECT_EQ(index.bundles_for(poll->uri).size(), 2u);
    EXPECT_EQ(index.size(), 6u);  // close, poll, remove, getFirst, initializeQueue, validateQueueState
}

}  // namespace
}  // namespace apt
