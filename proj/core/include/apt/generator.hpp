#pragma once

#include "apt/compression.hpp"
#include "apt/llm.hpp"
#include "apt/metainfo.hpp"
#include "apt/prompts.hpp"
#include "apt/property.hpp"
#include "apt/scope_graph.hpp"
#include "apt/test_bundle.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace apt {

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

/// Class-level relations point at methods of the focal class itself;
/// everything else (inherited, deduced) is repository-level.
enum class RankCategory { intra_complete, intra_gwt, inter_complete, inter_gwt };

std::string_view to_string(RankCategory category);
RankCategory category_of(const PropertyRelation& relation);

struct RankedRelation {
    PropertyRelation relation;
    RankCategory category = RankCategory::intra_complete;

    bool operator==(const RankedRelation&) const = default;
};

struct RankedSet {
    std::vector<RankedRelation> items;

    bool empty() const { return items.empty(); }
    std::size_t size() const { return items.size(); }
    /// One `- [Phase] Class.method(...) (confidence): reason` line per item.
    std::string render(const MetainfoDatabase& db) const;
};

/// Drops relations whose related method has no test bundle, then takes up to
/// `n` per category (each GWT category first reserves one slot per phase
/// that has candidates) and orders by category, confidence descending,
/// related Uri, phase. Throws ConfigError when n is 0.
RankedSet rank(const PropertySet& relations, const TestBundleIndex& bundles, std::size_t n);

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

struct BundleGroup {
    Uri method;
    std::string label;  // "RedissonQueue.poll() [Complete]"
    RankCategory category = RankCategory::intra_complete;
    std::vector<TestBundle> bundles;
    std::vector<std::string> repeats;  // "<case> from <test class>" shown in an earlier group

    bool operator==(const BundleGroup&) const = default;
};

struct BundleMap {
    std::vector<std::string> shared;  // blocks hoisted out of several bundles
    std::vector<BundleGroup> groups;  // ranked order
    bool minimized = false;

    std::string render() const;
    bool operator==(const BundleMap&) const = default;
};

/// Up to `per_method` bundles for each distinct ranked method.
BundleMap collect_bundles(const RankedSet& ranked, const TestBundleIndex& index, const MetainfoDatabase& db,
                          std::size_t per_method);

/// Import, member and fixture blocks occurring (whitespace-normalized) in
/// more than one bundle move to `shared`; a bundle repeated under a later
/// method becomes a reference to the earlier one. Test cases are untouched.
BundleMap minimize_bundles(BundleMap map);

// ---------------------------------------------------------------------------
// Context packing
// ---------------------------------------------------------------------------

struct PackOptions {
    std::size_t n = 3;
    std::size_t token_budget = 60000;
    std::size_t bundles_per_method = 2;
};

struct GenerationInput {
    bool fallback = false;
    std::string template_id;
    std::string template_hash;
    std::string class_name;
    std::string package_name;
    std::string test_class;  // generated test class name
    std::string focal_name;
    std::string focal_source;
    StaticContext sc;
    std::string owner_rendering;  // shrink of the focal class, or its montage after trimming
    std::set<std::string> kept_methods;
    std::vector<std::pair<Uri, std::string>> montages;  // classes of inter-class ranked methods
    RankedSet ranked;
    BundleMap bundles;  // minimized, after trimming
    std::vector<std::string> trimmed;
    std::string prompt;
    std::size_t token_estimate = 0;

    /// SC as handed to the model: resolved definitions, owner rendering,
    /// montages.
    std::string static_context_text() const;
};

/// `<Owner><Method>GenTest`; overloaded methods get their declaration index
/// appended.
std::string generated_test_name(const MetainfoDatabase& db, const MethodEntity& focal);

/// Throws BudgetExceeded when the context still overflows after every
/// trimming step.
GenerationInput pack_context(const MethodEntity& focal, const RankedSet& ranked, const MetainfoDatabase& db,
                             ScopeGraphCache& graphs, const TestBundleIndex& bundles, const PromptLibrary& prompts,
                             const PackOptions& options = {}, const Tokenizer& tokenizer = default_tokenizer());

/// m_t + SC + fallback prompt; no relation or bundle content.
GenerationInput fallback_input(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs,
                               const PromptLibrary& prompts, const PackOptions& options = {},
                               const Tokenizer& tokenizer = default_tokenizer());

// ---------------------------------------------------------------------------
// Generation and repair
// ---------------------------------------------------------------------------

enum class VerdictKind { compile_run_error, assert_error, success, full_coverage };

std::string_view to_string(VerdictKind kind);

struct Verdict {
    VerdictKind kind = VerdictKind::compile_run_error;
    std::string diagnostics;
    std::optional<double> line_coverage;    // percent
    std::optional<double> branch_coverage;  // percent
    bool verified = true;                   // false: parse checks only, no runner

    static Verdict of(VerdictKind kind, std::string diagnostics = {}) {
        Verdict v;
        v.kind = kind;
        v.diagnostics = std::move(diagnostics);
        return v;
    }

    bool passed() const { return kind == VerdictKind::success || kind == VerdictKind::full_coverage; }
    bool operator==(const Verdict&) const = default;
};

struct GeneratedTest {
    Uri focal;
    std::string class_name;
    std::string package_name;
    std::string source;
    std::filesystem::path path;  // absolute, under the generated-test root
    int repair_round = 0;
    std::optional<Verdict> verdict;
    Usage usage;
    int llm_calls = 0;
};

struct GenerateOptions {
    std::filesystem::path output_root = "generated-tests";
    std::vector<std::string> test_markers = {"Test", "ParameterizedTest", "RepeatedTest"};
};

struct PostProcessed {
    std::string source;
    std::vector<std::string> problems;  // empty when the source is usable
};

/// Extracts the Java file from a reply (fenced block or bare class), renames
/// the top-level class, injects the package and missing JUnit imports, and
/// parse-checks the result.
PostProcessed postprocess_test(std::string_view reply, const std::string& package_name, const std::string& class_name,
                               const std::vector<std::string>& test_markers);

/// One reprompt when the first reply is unusable, then GenerationFailure.
/// The test is written to `<output_root>/<package dirs>/<class>.java`.
GeneratedTest generate(const MethodEntity& focal, const GenerationInput& input, LlmGateway& llm,
                       const GenerateOptions& options = {});

using VerifyFn = std::function<Verdict(const GeneratedTest&)>;

inline constexpr int kMaxRepairRounds = 2;

/// At most min(max_rounds, 2) repair prompts; stops at the first passing
/// verdict.
GeneratedTest repair(GeneratedTest test, const GenerationInput& input, LlmGateway& llm, const PromptLibrary& prompts,
                     const VerifyFn& verify, int max_rounds = kMaxRepairRounds, const GenerateOptions& options = {});

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

struct RunnerConfig {
    /// Placeholders: {project} {test_file} {test_class} {test_name}.
    std::string compile_cmd;
    std::string test_cmd;
    std::string coverage_cmd;  // optional
    std::string test_root = "src/test/java";
    std::vector<std::string> test_report_globs = {"**/TEST-*.xml"};
    std::vector<std::string> coverage_report_globs = {"**/jacoco.xml"};
};

struct JUnitOutcome {
    bool found = false;
    int tests = 0;
    int failures = 0;  // assertion failures
    int errors = 0;    // unexpected exceptions
    int skipped = 0;
    std::string messages;
};

/// Sums the `<testcase>` results of `test_class` (fully qualified) over
/// JUnit XML documents. Throws ParseError for malformed XML.
JUnitOutcome parse_junit_reports(const std::vector<std::string>& documents, std::string_view test_class);

struct MethodCoverage {
    bool found = false;
    int line_missed = 0;
    int line_covered = 0;
    int branch_missed = 0;
    int branch_covered = 0;

    double line_percent() const;
    double branch_percent() const;  // 100 when the method has no branches
};

/// Finds `method` of `owner` in a JaCoCo XML report, matching name and
/// parameter descriptors.
MethodCoverage parse_jacoco_method(const std::string& document, const MetainfoDatabase& db, const MethodEntity& method);

/// Places the test into a sandbox copy of `project`, runs the configured
/// commands, and classifies from the report files.
Verdict verify(const GeneratedTest& test, const std::filesystem::path& project, const RunnerConfig& runner,
               const MetainfoDatabase& db, const MethodEntity& focal);

// ---------------------------------------------------------------------------
// One focal method end to end
// ---------------------------------------------------------------------------

struct GenerationOptions {
    PackOptions pack;
    GenerateOptions generate;
    int max_repair_rounds = kMaxRepairRounds;
};

struct GenerationContext {
    const MetainfoDatabase& db;
    ScopeGraphCache& graphs;
    const TestBundleIndex& bundles;
    LlmGateway& llm;
    const PromptLibrary& prompts;
    GenerationOptions options;
    /// Unset: tests are admitted on parse checks alone (unverified).
    VerifyFn verify;
};

struct GenerationRecord {
    Uri focal;
    int attempt = 1;
    bool fallback = false;
    std::size_t ranked = 0;
    std::optional<GeneratedTest> test;
    std::optional<Verdict> verdict;
    std::string error;  // generation failure, when no test was produced
    std::optional<std::chrono::milliseconds> elapsed;  // only with a timed provider

    bool admitted() const { return verdict && verdict->passed(); }
};

/// One results.jsonl line (no trailing newline).
std::string to_json_line(const GenerationRecord& record, const std::filesystem::path& relative_to);

GenerationRecord generate_for_method(const MethodEntity& focal, const PropertySet& relations,
                                     const GenerationContext& ctx, bool force_fallback = false);

}  // namespace apt
