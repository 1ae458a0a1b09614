#pragma once

#include "apt/generator.hpp"
#include "apt/llm.hpp"
#include "apt/metainfo.hpp"
#include "apt/prompts.hpp"
#include "apt/property.hpp"
#include "apt/test_bundle.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace apt {

/// True iff some relation of `method` points at a method that has bundles.
bool eligible(const Uri& method, const PropertySet& relations, const TestBundleIndex& bundles);

struct IterationOptions {
    int max_rounds = 5;
    /// Methods never eligible get one fallback generation after the loop.
    bool fallback_sweep = true;
    unsigned jobs = 1;
};

struct RoundSummary {
    int round = 0;
    std::size_t pending = 0;  // uncovered focal methods at round start
    std::size_t eligible = 0;
    std::size_t generated = 0;
    std::size_t admitted = 0;
    std::map<std::string, std::size_t> verdicts;  // verdict name -> count, GenerationFailure included
    std::vector<Uri> newly_covered;
};

struct TrajectoryStep {
    int round = 0;
    bool fallback = false;
    std::string verdict;
};

struct IterationReport {
    std::size_t focal_methods = 0;
    std::size_t initially_covered = 0;
    std::size_t covered = 0;
    int progressing_rounds = 0;
    std::string stop_reason;  // all_covered, fixpoint, max_rounds, no_seeds
    bool verified = false;
    std::vector<RoundSummary> rounds;
    std::optional<RoundSummary> fallback_sweep;
    std::map<Uri, std::vector<TrajectoryStep>> trajectories;
    std::vector<GenerationRecord> records;  // round order, then focal Uri order
    std::set<Uri> covered_methods;
};

nlohmann::ordered_json to_json(const IterationReport& report);

/// What the loop needs from the rest of the pipeline. `generate` sets the
/// record's verdict; `refresh` folds the admitted tests back in and returns
/// the new bundle index.
struct IterationHooks {
    std::function<PropertySet(const Uri& focal)> relations;
    std::function<GenerationRecord(const Uri& focal, const PropertySet& relations, const TestBundleIndex& bundles,
                                   bool fallback)>
        generate;
    std::function<TestBundleIndex(const std::vector<const GenerationRecord*>& admitted)> refresh;
};

/// The fixpoint loop over `focal`. A method already attempted is retried
/// only when the set of its related methods holding bundles has changed.
IterationReport iterate_to_fixpoint(const std::vector<Uri>& focal, TestBundleIndex bundles, const IterationHooks& hooks,
                                    const IterationOptions& options = {});

/// Methods worth generating a test for: bodies of non-test classes, neither
/// private, abstract nor constructors.
std::vector<Uri> focal_methods(const MetainfoDatabase& db);

struct IterationConfig {
    std::filesystem::path root;
    /// results.jsonl, iteration-report.json, generated-tests/, candidates/,
    /// and the relations/ and analyses/ caches.
    std::filesystem::path out_dir;
    IndexConfig index;
    AnalyzeOptions analyze;
    RetrievalOptions retrieval;
    GenerationOptions generation;
    IterationOptions iteration;
    std::optional<RunnerConfig> runner;
    /// Restricts the focal set; empty means every focal method.
    std::vector<Uri> only;
};

/// Runs the whole loop on a repository and writes results.jsonl and
/// iteration-report.json into out_dir. Earlier generated tests under out_dir
/// are discarded first so re-runs start from the same seeds.
IterationReport run_iterations(LlmGateway& llm, const PromptLibrary& prompts, const IterationConfig& config);

/// Intra-class relations of `focal`, memoized under `cache_dir/<key>.json`
/// where the key covers the focal Uri, the class context and the prompt
/// template.
PropertySet cached_relations(const MethodEntity& focal, const MetainfoDatabase& db, ScopeGraphCache& graphs,
                             LlmGateway& llm, const PromptLibrary& prompts, const RetrievalOptions& options,
                             const std::optional<std::filesystem::path>& cache_dir);

}  // namespace apt
