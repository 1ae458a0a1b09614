#pragma once

#include "apt/generator.hpp"
#include "apt/iteration.hpp"
#include "apt/llm.hpp"
#include "apt/metainfo.hpp"
#include "apt/property.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace apt::cli {

inline constexpr int kRepairRoundCap = 2;

struct ToolConfig {
    std::filesystem::path config_file;  // empty when running on defaults
    std::filesystem::path root;
    IndexConfig index;

    std::string provider = "mock";  // mock | http
    std::filesystem::path mock_script;
    HttpProviderConfig http;
    int retries = 3;
    std::size_t max_concurrent_requests = 4;

    std::size_t n = 3;
    int max_repair_rounds = 2;
    std::size_t token_budget = 60000;
    std::size_t bundles_per_method = 2;
    std::size_t inherited_budget = 4000;
    Damping damping;

    int max_rounds = 5;
    bool fallback_sweep = true;

    RunnerConfig runner;

    std::filesystem::path out_dir;    // resolved against root
    std::filesystem::path index_dir;  // resolved against root
    std::filesystem::path prompts_dir;  // empty: embedded templates only
    bool transcripts = false;
    unsigned jobs = 1;

    bool runner_configured() const { return !runner.test_cmd.empty(); }
    GatewayConfig gateway() const;
    GenerationOptions generation() const;
    RetrievalOptions retrieval() const;
    IterationConfig iteration() const;
};

/// Reads `explicit_path` when given, else `<cwd>/apt.toml` when it exists,
/// else the defaults rooted at `cwd`. Unknown keys, wrong types and values
/// out of range are ConfigErrors.
ToolConfig load_config(const std::optional<std::filesystem::path>& explicit_path, const std::filesystem::path& cwd);

ToolConfig config_from_toml(std::string_view text, const std::string& origin, const std::filesystem::path& base_dir);

/// Every key with its default and meaning, one per line, grouped by section.
std::string config_reference();

}  // namespace apt::cli
