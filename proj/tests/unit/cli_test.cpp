#include "cli.hpp"
#include "config.hpp"
#include "toml_subset.hpp"

#include "apt/error.hpp"
#include "apt/util.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

namespace fs = std::filesystem;
using namespace apt;
using namespace apt::cli;
using apt::testing::copy_tree;
using apt::testing::fixture_path;
using apt::testing::TempDir;
using Json = nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args, const fs::path& cwd) {
    std::ostringstream out, err;
    int code = run(args, out, err, cwd);
    return {code, out.str(), err.str()};
}

std::string config_error(std::string_view text) {
    try {
        config_from_toml(text, "apt.toml", "/repo");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(TomlSubset, ReadsSectionsScalarsAndArrays) {
    auto t = parse_toml_subset(R"(# top
top = "a\tb"
[runner]
test_cmd = 'mvn -q test -Dtest={test_class}'   # literal
retries = 1_000
ratio = 0.5
on = false
globs = [
  "target/**/*.xml",  # surefire
  "build/*.xml",
]
)",
                               "t.toml");
    EXPECT_EQ(std::get<std::string>(t.at("top").value), "a\tb");
    EXPECT_EQ(std::get<std::string>(t.at("runner.test_cmd").value), "mvn -q test -Dtest={test_class}");
    EXPECT_EQ(std::get<std::int64_t>(t.at("runner.retries").value), 1000);
    EXPECT_DOUBLE_EQ(std::get<double>(t.at("runner.ratio").value), 0.5);
    EXPECT_FALSE(std::get<bool>(t.at("runner.on").value));
    EXPECT_EQ(std::get<std::vector<std::string>>(t.at("runner.globs").value),
              (std::vector<std::string>{"target/**/*.xml", "build/*.xml"}));
    EXPECT_EQ(t.at("runner.globs").line, 8);
}

TEST(TomlSubset, RejectsWhatItDoesNotRead) {
    for (auto text : {"a.b = 1", "[[runs]]", "a = 1\na = 2", "a = [1, 2]", "a = \"open", "[a.b]", "a ="}) {
        EXPECT_THROW(parse_toml_subset(text, "t.toml"), ConfigError) << text;
    }
    try {
        parse_toml_subset("x = 1\ny = @", "conf.toml");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("conf.toml:2"), std::string::npos) << e.what();
    }
}

TEST(Config, ValidatesKeysTypesAndRanges) {
    EXPECT_NE(config_error("[generation]\ntemperature = 1").find("unknown key"), std::string::npos);
    EXPECT_NE(config_error("[generation]\nn = \"three\"").find("string"), std::string::npos);
    EXPECT_FALSE(config_error("[generation]\nmax_repair_rounds = 3").empty());
    EXPECT_TRUE(config_error("[generation]\nmax_repair_rounds = 2").empty());
    EXPECT_FALSE(config_error("[iteration]\nmax_rounds = 0").empty());
    EXPECT_FALSE(config_error("[provider]\nkind = \"grpc\"").empty());
    EXPECT_FALSE(config_error("[retrieval]\ndamping_sibling = 1.5").empty());
    EXPECT_FALSE(config_error("[repo]\nlanguage = \"cobol\"").empty());
}

TEST(Config, ResolvesPathsAndExcludesOutputs) {
    auto c = config_from_toml(R"([repo]
root = "project"
[provider]
mock_script = "scripts/mock.json"
[output]
dir = "out"
)",
                              "apt.toml", "/work");
    EXPECT_EQ(c.root, fs::path("/work/project"));
    EXPECT_EQ(c.out_dir, fs::path("/work/project/out"));
    EXPECT_EQ(c.index_dir, fs::path("/work/project/.apt-index"));
    EXPECT_EQ(c.mock_script, fs::path("/work/scripts/mock.json"));
    auto& ex = c.index.exclude_globs;
    EXPECT_NE(std::find(ex.begin(), ex.end(), "out/**"), ex.end());
    EXPECT_NE(std::find(ex.begin(), ex.end(), ".apt-index/**"), ex.end());
    EXPECT_FALSE(c.runner_configured());
    EXPECT_EQ(c.generation().generate.output_root, c.out_dir / "generated-tests");
}

TEST(Config, DefaultsWithoutAFile) {
    TempDir dir;
    auto c = load_config(std::nullopt, dir.path());
    EXPECT_TRUE(c.config_file.empty());
    EXPECT_EQ(c.root, dir.path());
    EXPECT_EQ(c.max_repair_rounds, 2);
    EXPECT_THROW(load_config(dir.path() / "missing.toml", dir.path()), ConfigError);
}

TEST(Cli, HelpListsEveryConfigKey) {
    TempDir dir;
    auto r = run_cli({"--help"}, dir.path());
    EXPECT_EQ(r.code, kExitOk);
    std::string section;
    for (auto& line : split_lines(config_reference())) {
        if (line.empty()) continue;
        EXPECT_NE(r.out.find(line), std::string::npos) << line;
    }
    for (auto key : {"[generation]", "max_repair_rounds = 2", "[runner]", "test_cmd = \"\"", "[iteration]",
                     "fallback_sweep = true", "jobs = 1"}) {
        EXPECT_NE(r.out.find(key), std::string::npos) << key;
    }
}

TEST(Cli, UsageAndConfigErrorsExitWithOne) {
    TempDir dir;
    EXPECT_EQ(run_cli({}, dir.path()).code, kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}, dir.path()).code, kExitUsage);
    EXPECT_EQ(run_cli({"retrieve"}, dir.path()).code, kExitUsage);  // --method is required
    EXPECT_EQ(run_cli({"--provider", "grpc", "index"}, dir.path()).code, kExitUsage);

    dir.write("apt.toml", "[generation]\nmax_repair_rounds = 5\n");
    auto r = run_cli({"index"}, dir.path());
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("error[config]"), std::string::npos) << r.err;
}

TEST(Cli, IndexOfAnEmptyRepository) {
    TempDir dir;
    auto r = run_cli({"index"}, dir.path());
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("indexed 0 files, 0 classes, 0 methods"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(dir.path() / ".apt-index" / "manifest.json"));
}

TEST(Cli, ReportWithoutResultsIsAPipelineError) {
    TempDir dir;
    auto r = run_cli({"report"}, dir.path());
    EXPECT_EQ(r.code, kExitPipeline);
    EXPECT_NE(r.err.find("run apt iterate first"), std::string::npos) << r.err;
}

class CliOnRedisson : public ::testing::Test {
protected:
    void SetUp() override {
        copy_tree(fixture_path("redisson_mini"), dir.path());
        dir.write("apt.toml", "[provider]\nkind = \"mock\"\nmock_script = \"" +
                                  fixture_path("scripts/redisson_mini.json").generic_string() + "\"\n");
    }
    TempDir dir;
};

TEST_F(CliOnRedisson, RetrievePrintsTheQueueRelations) {
    auto r = run_cli({"retrieve", "--method", "RedissonQueue.removeFirst()"}, dir.path());
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto rows = Json::parse(r.out);
    ASSERT_EQ(rows.size(), 6u);
    std::vector<std::string> got;
    for (auto& row : rows) got.push_back(row["phase"].get<std::string>() + " " + row["method"].get<std::string>());
    EXPECT_EQ(got, (std::vector<std::string>{"Complete RedissonQueue.poll()", "Complete RedissonQueue.remove()",
                                             "Complete RedissonQueue.getFirst()", "Given RedissonQueue.initializeQueue(int)",
                                             "When RedissonQueue.validateQueueState()",
                                             "Then RedissonQueue.verifyRemoval(V)"}));
    EXPECT_DOUBLE_EQ(rows[0]["confidence"].get<double>(), 0.90);
}

TEST_F(CliOnRedisson, UnknownMethodIsAConfigError) {
    auto r = run_cli({"retrieve", "--method", "RedissonQueue.nothingHere()"}, dir.path());
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("no indexed method matches"), std::string::npos) << r.err;
}

TEST_F(CliOnRedisson, MontageAndShrink) {
    auto m = run_cli({"montage", "RedisCommonBatchExecutor"}, dir.path());
    ASSERT_EQ(m.code, kExitOk) << m.err;
    EXPECT_EQ(m.out, read_file(fixture_path("goldens/redis_common_batch_executor.montage.java")));

    auto s = run_cli({"shrink", "RedisCommonBatchExecutor", "--keep", "retryAttempts,retryInterval"}, dir.path());
    ASSERT_EQ(s.code, kExitOk) << s.err;
    EXPECT_NE(s.out.find("retryAttempts"), std::string::npos);
    EXPECT_EQ(s.out.find("sendCommand"), std::string::npos);
}

TEST_F(CliOnRedisson, IterateIsRepeatableAndReportable) {
    auto first = run_cli({"iterate"}, dir.path());
    ASSERT_EQ(first.code, kExitOk) << first.err;
    auto results = read_file(dir.path() / "apt-out/results.jsonl");
    auto report = read_file(dir.path() / "apt-out/iteration-report.json");
    auto j = Json::parse(report);
    EXPECT_EQ(j["stop_reason"], "fixpoint");
    EXPECT_EQ(j["progressing_rounds"], 2);
    EXPECT_EQ(j["covered"], j["focal_methods"]);

    auto again = run_cli({"--jobs", "3", "iterate"}, dir.path());
    ASSERT_EQ(again.code, kExitOk) << again.err;
    EXPECT_EQ(read_file(dir.path() / "apt-out/results.jsonl"), results);
    EXPECT_EQ(read_file(dir.path() / "apt-out/iteration-report.json"), report);

    auto shown = run_cli({"report"}, dir.path());
    ASSERT_EQ(shown.code, kExitOk) << shown.err;
    EXPECT_EQ(shown.out, first.out);
    EXPECT_NE(shown.out.find("stopped: fixpoint"), std::string::npos);
}

TEST_F(CliOnRedisson, GenerateOneMethod) {
    auto r = run_cli({"generate", "--method", "RedissonAtomicLong.incrementAndGet()"}, dir.path());
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto rec = Json::parse(r.out);
    EXPECT_EQ(rec["test_class"], "RedissonAtomicLongIncrementAndGetGenTest");
    EXPECT_EQ(rec["fallback"], true);  // none of its relatives has a test yet
    EXPECT_TRUE(fs::exists(dir.path() / rec["test_file"].get<std::string>()));
}

TEST(RenderReport, CountsTheFinalRecordPerFocal) {
    std::string results =
        R"({"focal":"a","attempt":1,"verdict":"CompileRunError","verified":true})" "\n"
        R"({"focal":"a","attempt":2,"verdict":"FullCoverage","verified":true})" "\n"
        R"({"focal":"b","attempt":1,"verdict":"AssertError","verified":true})" "\n";
    std::string report = R"({"focal_methods":3,"initially_covered":0,"covered":1,"stop_reason":"max_rounds",
        "rounds":[{"round":1,"pending":3,"eligible":2,"generated":2,"admitted":1,"newly_covered":["a"]}],
        "fallback_sweep":null})";
    auto text = render_report(results, report);
    EXPECT_NE(text.find("Assertion error               1   50.0%"), std::string::npos) << text;
    EXPECT_NE(text.find("Successful execution          1   50.0%"), std::string::npos) << text;
    EXPECT_NE(text.find("  full coverage               1   50.0%"), std::string::npos) << text;
    EXPECT_NE(text.find("Total                         2"), std::string::npos) << text;
    EXPECT_NE(text.find("Covered 1 of 3 focal methods (0 before iterating); stopped: max_rounds"), std::string::npos);
    EXPECT_EQ(text.find("sweep"), std::string::npos);
}
