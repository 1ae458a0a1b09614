#pragma once

#include <filesystem>
#include <string>

namespace apt::testing {

std::filesystem::path fixture_path(const std::string& relative);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

    /// Writes `content` to `relative`, creating parent directories.
    std::filesystem::path write(const std::string& relative, const std::string& content) const;

private:
    std::filesystem::path path_;
};

/// Copies a fixture tree into a new temp dir so tests may write into it.
void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to);

}  // namespace apt::testing
