#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace apt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitPipeline = 2;

/// `args` excludes the program name. Relative paths resolve against `cwd`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::filesystem::path& cwd = std::filesystem::current_path());

/// Verdict table (final outcome per focal method) followed by the per-round
/// table, from the contents of results.jsonl and iteration-report.json.
std::string render_report(const std::string& results_jsonl, const std::string& iteration_report);

}  // namespace apt::cli
