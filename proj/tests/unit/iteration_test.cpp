#include "apt/error.hpp"
#include "apt/iteration.hpp"
#include "apt/util.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace apt {
namespace {

using Json = nlohmann::json;
using testing::copy_tree;
using testing::fixture_path;
using testing::TempDir;

using testing::FakePipeline;
using testing::seed_bundle;

PropertyRelation rel(const std::string& focal, const std::string& related) {
    return testing::complete_relation(focal, related);
}

TEST(Eligible, NeedsARelatedMethodWithBundles) {
    PropertySet set;
    set.add(rel("m", "a"));
    set.add(rel("m", "b"));
    TestBundleIndex bundles;
    EXPECT_FALSE(eligible(Uri("m"), set, bundles));
    bundles.add(Uri("m"), seed_bundle("own"));  // its own tests do not count
    EXPECT_FALSE(eligible(Uri("m"), set, bundles));
    bundles.add(Uri("b"), seed_bundle("tb"));
    EXPECT_TRUE(eligible(Uri("m"), set, bundles));
    EXPECT_FALSE(eligible(Uri("m"), PropertySet{}, bundles));
}

TEST(Eligible, MatchesExistentialFormulaOnRandomInputs) {
    std::mt19937 rng(3);
    for (int round = 0; round < 300; ++round) {
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        PropertySet set;
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j && std::bernoulli_distribution(0.2)(rng)) {
                    set.add(rel("m" + std::to_string(i), "m" + std::to_string(j)));
                    edges.emplace_back(i, j);
                }
            }
        }
        TestBundleIndex bundles;
        std::vector<bool> tested(n);
        for (int i = 0; i < n; ++i) {
            tested[i] = std::bernoulli_distribution(0.3)(rng);
            if (tested[i]) bundles.add(Uri("m" + std::to_string(i)), seed_bundle("t"));
        }
        for (int i = 0; i < n; ++i) {
            bool expected = false;
            for (auto [a, b] : edges) expected = expected || (a == i && tested[b]);
            EXPECT_EQ(eligible(Uri("m" + std::to_string(i)), set, bundles), expected);
        }
    }
}

std::vector<Uri> uris(std::initializer_list<const char*> names) {
    std::vector<Uri> out;
    for (auto* n : names) out.emplace_back(n);
    return out;
}

TEST(Fixpoint, ChainCoversOneLinkPerRound) {
    FakePipeline p;
    p.graph[Uri("m2")].add(rel("m2", "m1"));
    p.graph[Uri("m3")].add(rel("m3", "m2"));
    p.seeds.add(Uri("m1"), seed_bundle("m1Test"));
    auto report = iterate_to_fixpoint(uris({"m1", "m2", "m3"}), p.seeds, p.hooks());
    EXPECT_EQ(report.initially_covered, 1u);
    EXPECT_EQ(report.progressing_rounds, 2);
    ASSERT_EQ(report.rounds.size(), 2u);
    EXPECT_EQ(report.rounds[0].newly_covered, uris({"m2"}));
    EXPECT_EQ(report.rounds[1].newly_covered, uris({"m3"}));
    EXPECT_EQ(report.stop_reason, "all_covered");
    EXPECT_EQ(report.covered, 3u);
    EXPECT_FALSE(report.fallback_sweep);
    EXPECT_EQ(p.calls.size(), 2u);
}

TEST(Fixpoint, CycleWithoutTestsMakesNoProgress) {
    FakePipeline p;
    p.graph[Uri("a")].add(rel("a", "b"));
    p.graph[Uri("b")].add(rel("b", "a"));
    IterationOptions opts;
    opts.fallback_sweep = false;
    auto report = iterate_to_fixpoint(uris({"a", "b"}), {}, p.hooks(), opts);
    ASSERT_EQ(report.rounds.size(), 1u);
    EXPECT_EQ(report.rounds[0].eligible, 0u);
    EXPECT_EQ(report.progressing_rounds, 0);
    EXPECT_EQ(report.stop_reason, "no_seeds");
    EXPECT_TRUE(p.calls.empty());

    // with the sweep, both get one fallback attempt
    auto swept = iterate_to_fixpoint(uris({"a", "b"}), {}, p.hooks());
    ASSERT_TRUE(swept.fallback_sweep);
    EXPECT_EQ(swept.fallback_sweep->generated, 2u);
    EXPECT_EQ(swept.fallback_sweep->round, 2);
    EXPECT_EQ(p.calls, (std::vector<std::pair<Uri, bool>>{{Uri("a"), true}, {Uri("b"), true}}));
    EXPECT_EQ(swept.covered, 2u);
}

TEST(Fixpoint, AssertErrorsAreNotSeeds) {
    FakePipeline p;
    p.graph[Uri("m2")].add(rel("m2", "m1"));
    p.graph[Uri("m3")].add(rel("m3", "m2"));
    p.seeds.add(Uri("m1"), seed_bundle("m1Test"));
    p.broken = {Uri("m2")};
    p.failure = VerdictKind::assert_error;
    IterationOptions opts;
    opts.fallback_sweep = false;
    auto report = iterate_to_fixpoint(uris({"m1", "m2", "m3"}), p.seeds, p.hooks(), opts);
    ASSERT_EQ(report.rounds.size(), 1u);
    EXPECT_EQ(report.rounds[0].verdicts, (std::map<std::string, std::size_t>{{"AssertError", 1}}));
    EXPECT_TRUE(report.rounds[0].newly_covered.empty());
    EXPECT_EQ(report.stop_reason, "fixpoint");
    EXPECT_FALSE(report.covered_methods.contains(Uri("m2")));
    EXPECT_FALSE(report.covered_methods.contains(Uri("m3")));
    EXPECT_EQ(report.trajectories.at(Uri("m2")).size(), 1u);
}

TEST(Fixpoint, RoundLimitIsHonoured) {
    FakePipeline p;
    std::vector<Uri> focal{Uri("x0")};
    p.seeds.add(Uri("x0"), seed_bundle("t"));
    for (int i = 1; i < 10; ++i) {
        auto m = "x" + std::to_string(i);
        p.graph[Uri(m)].add(rel(m, "x" + std::to_string(i - 1)));
        focal.emplace_back(m);
    }
    IterationOptions opts;
    opts.max_rounds = 3;
    opts.fallback_sweep = false;
    auto report = iterate_to_fixpoint(focal, p.seeds, p.hooks(), opts);
    EXPECT_EQ(report.rounds.size(), 3u);
    EXPECT_EQ(report.stop_reason, "max_rounds");
    EXPECT_EQ(report.covered, 4u);
    opts.max_rounds = 0;
    EXPECT_THROW(iterate_to_fixpoint(focal, p.seeds, p.hooks(), opts), ConfigError);
}

TEST(Fixpoint, RandomGraphsFollowTheLayerOracle) {
    std::mt19937 rng(19);
    for (int round = 0; round < 200; ++round) {
        auto c = testing::random_graph_case(rng);
        auto report = iterate_to_fixpoint(c.focal, c.pipeline.seeds, c.pipeline.hooks(), c.options);
        auto problems = testing::check_iteration(c, report);
        ASSERT_TRUE(problems.empty()) << "case " << round << ": " << problems.front();
    }
}

// ---------------------------------------------------------------------------
// On disk, with the scripted provider
// ---------------------------------------------------------------------------

struct DiskRun {
    IterationReport report;
    std::string results;
    std::string report_text;
    std::size_t llm_calls = 0;
};

DiskRun run_fixture(const std::filesystem::path& repo, const std::string& name, bool sweep = true) {
    auto provider = std::make_unique<ScriptedProvider>(Json::parse(read_file(fixture_path(name) / "mock.json")));
    auto* raw = provider.get();
    LlmGateway llm(std::move(provider), {});
    IterationConfig config;
    config.root = repo;
    config.out_dir = repo / "apt-out";
    config.iteration.fallback_sweep = sweep;
    DiskRun run;
    run.report = run_iterations(llm, PromptLibrary::embedded(), config);
    run.results = read_file(config.out_dir / "results.jsonl");
    run.report_text = read_file(config.out_dir / "iteration-report.json");
    run.llm_calls = raw->calls();
    return run;
}

TEST(RunIterations, ChainFixtureReachesFixpointInTwoRounds) {
    TempDir dir;
    copy_tree(fixture_path("chain"), dir.path());
    auto run = run_fixture(dir.path(), "chain");
    const auto& r = run.report;
    EXPECT_EQ(r.focal_methods, 3u);
    EXPECT_EQ(r.initially_covered, 1u);
    EXPECT_EQ(r.progressing_rounds, 2);
    ASSERT_EQ(r.rounds.size(), 2u);
    const std::string chain = "src/main/java/chain/Chain.java.Chain.";
    EXPECT_EQ(r.rounds[0].newly_covered, std::vector<Uri>{Uri(chain + "[int]m2()")});
    EXPECT_EQ(r.rounds[1].newly_covered, std::vector<Uri>{Uri(chain + "[int]m3()")});
    EXPECT_EQ(r.stop_reason, "all_covered");
    EXPECT_FALSE(r.verified);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "apt-out/generated-tests/chain/ChainM2GenTest.java"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "apt-out/generated-tests/chain/ChainM3GenTest.java"));

    auto lines = split_lines(run.results);
    ASSERT_EQ(lines.size(), 2u);
    auto first = Json::parse(lines[0]);
    EXPECT_EQ(first["focal"], chain + "[int]m2()");
    EXPECT_EQ(first["attempt"], 1);
    EXPECT_EQ(first["verdict"], "Success");
    EXPECT_EQ(first["verified"], false);
    EXPECT_EQ(first["test_file"], "apt-out/generated-tests/chain/ChainM2GenTest.java");
    auto report = Json::parse(run.report_text);
    EXPECT_EQ(report["progressing_rounds"], 2);
    EXPECT_EQ(report["rounds"][1]["newly_covered"][0], chain + "[int]m3()");

    // a second run starts from the same seeds, hits the caches and writes the same bytes
    auto again = run_fixture(dir.path(), "chain");
    EXPECT_EQ(again.results, run.results);
    EXPECT_EQ(again.report_text, run.report_text);
    EXPECT_LT(again.llm_calls, run.llm_calls);
}

TEST(RunIterations, CycleFixtureStopsWithoutSeeds) {
    TempDir dir;
    copy_tree(fixture_path("cycle"), dir.path());
    auto none = run_fixture(dir.path(), "cycle", false);
    ASSERT_EQ(none.report.rounds.size(), 1u);
    EXPECT_EQ(none.report.rounds[0].eligible, 0u);
    EXPECT_EQ(none.report.stop_reason, "no_seeds");
    EXPECT_EQ(none.results, "");

    auto swept = run_fixture(dir.path(), "cycle");
    ASSERT_TRUE(swept.report.fallback_sweep);
    EXPECT_EQ(swept.report.fallback_sweep->admitted, 2u);
    auto lines = split_lines(swept.results);
    ASSERT_GE(lines.size(), 2u);
    EXPECT_EQ(Json::parse(lines[0])["fallback"], true);
    EXPECT_EQ(Json::parse(lines[0])["ranked"], 0);
}

}  // namespace
}  // namespace apt
