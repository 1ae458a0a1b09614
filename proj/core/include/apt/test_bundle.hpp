#pragma once

#include "apt/compression.hpp"
#include "apt/llm.hpp"
#include "apt/metainfo.hpp"
#include "apt/prompts.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apt {

struct TestCaseAnalysis {
    std::string name;
    std::vector<std::string> primary_tested;  // `Class.method(Types)`
    std::vector<std::string> external_dependencies;
    std::vector<std::string> fixtures_used;
    std::vector<std::string> project_specific_resources;
    std::vector<std::string> unresolved;  // primary_tested entries absent from the database

    bool operator==(const TestCaseAnalysis&) const = default;
};

struct ClassMembers {
    std::vector<std::string> variables;
    std::vector<std::string> methods;
    std::vector<std::string> nested_classes;

    bool operator==(const ClassMembers&) const = default;
};

struct TestClassAnalysis {
    std::string file_path;
    std::string name;
    std::vector<std::string> dependencies;
    ClassMembers class_members;
    std::vector<std::string> fixtures;
    std::vector<TestCaseAnalysis> test_cases;
    std::string content_hash;
    std::string prompt_hash;

    const TestCaseAnalysis* find_case(std::string_view case_name) const;
    bool operator==(const TestClassAnalysis&) const = default;
};

nlohmann::ordered_json to_json(const TestClassAnalysis& analysis);
/// Throws SchemaError.
TestClassAnalysis analysis_from_json(const nlohmann::json& j);

/// What the source alone says about a test class: fields, fixtures, test
/// methods, helpers, nested classes and imports.
struct TestClassSkeleton {
    std::string name;
    std::vector<std::string> imports;  // as written after `import`, e.g. "static org.junit.Assert.*"
    ClassMembers members;
    std::vector<std::string> fixtures;
    std::vector<std::string> test_methods;
};

struct BundleOptions {
    std::vector<std::string> fixture_markers = {"BeforeEach", "BeforeAll", "AfterEach", "AfterAll",
                                                "Before", "After", "BeforeClass", "AfterClass"};
    std::vector<std::string> test_markers = {"Test", "ParameterizedTest", "RepeatedTest"};
};

/// Throws ParseError. `class_name` empty picks the first top-level class.
TestClassSkeleton read_test_class(const std::string& source, const std::string& class_name,
                                  const BundleOptions& options = {});

/// Classes whose montage accompanies the test class in the analysis prompt:
/// the class named after the test (minus Test/Tests/IT), classes imported from
/// main sources, and their resolvable ancestors. Uri order.
std::vector<const ClassEntity*> classes_under_test(const MetainfoDatabase& db, const ClassEntity& test_class,
                                                   const IndexConfig& index_config = {});

/// Resolves `Class.method(Types)` against the database, looking through the
/// class's ancestors when the method is inherited. nullptr when unknown.
const MethodEntity* resolve_method_reference(const MetainfoDatabase& db, std::string_view reference);

struct AnalyzeOptions {
    BundleOptions bundle;
    IndexConfig index;
};

/// Prompts the model with the test source and the montages, validates the
/// answer (one reprompt listing the problems), then overlays the facts read
/// from the source. Throws MalformedOutput when the second answer is still
/// invalid.
TestClassAnalysis analyze_test_class(const MetainfoDatabase& db, const ClassEntity& test_class,
                                     const std::string& source, LlmGateway& llm, const PromptLibrary& prompts,
                                     const AnalyzeOptions& options = {});

struct TestBundle {
    Uri test_class;
    std::string case_name;
    std::string test_case;
    std::vector<std::string> fixtures;
    std::vector<std::string> imports;        // full import lines
    std::vector<std::string> class_members;  // member declarations, verbatim

    std::string render() const;
    bool operator==(const TestBundle&) const = default;
};

/// Slices the bundle of `case_name` from `source`: the test case, its
/// fixtures, and the imports and members whose names occur as identifier
/// tokens in what is included (members transitively). Wildcard imports are
/// always kept. Throws NotFoundError for an unknown case.
TestBundle extract_bundle(const TestClassAnalysis& analysis, const std::string& case_name, const std::string& source,
                          const BundleOptions& options = {});

class TestBundleIndex {
public:
    const std::vector<TestBundle>& bundles_for(const Uri& method) const;
    bool has_bundles(const Uri& method) const { return !bundles_for(method).empty(); }
    const std::map<Uri, std::vector<TestBundle>>& by_method() const { return by_method_; }
    std::size_t size() const { return by_method_.size(); }
    bool empty() const { return by_method_.empty(); }

    void add(const Uri& method, TestBundle bundle);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
    void add_diagnostic(Diagnostic d) { diagnostics_.push_back(std::move(d)); }

private:
    std::map<Uri, std::vector<TestBundle>> by_method_;
    std::vector<Diagnostic> diagnostics_;
};

/// Reads each analysis's source as `root / file_path`.
TestBundleIndex build_bundle_index(const std::vector<TestClassAnalysis>& analyses, const MetainfoDatabase& db,
                                   const std::filesystem::path& root, const BundleOptions& options = {});

struct TestAnalysisRun {
    std::vector<TestClassAnalysis> analyses;
    std::vector<Diagnostic> failures;  // classes whose analysis failed
    std::size_t cache_hits = 0;
};

/// Analyzes every top-level test class of the database, reusing
/// `cache_dir/<content hash>.json` when its prompt hash matches. Results
/// are in class Uri order whatever `jobs` is.
TestAnalysisRun analyze_repository_tests(const MetainfoDatabase& db, const std::filesystem::path& root,
                                                        LlmGateway& llm, const PromptLibrary& prompts,
                                                        const std::optional<std::filesystem::path>& cache_dir,
                                                        unsigned jobs = 1, const AnalyzeOptions& options = {});

}  // namespace apt
