#pragma once

#include <filesystem>
#include <string>

namespace ragkit {

// Workspace directory layout shared by all CLI subcommands.
struct WorkspaceLayout {
    std::filesystem::path root;

    std::filesystem::path corpora() const { return root / "corpora"; }
    std::filesystem::path indexes() const { return root / "indexes"; }
    std::filesystem::path embeddings() const { return root / "embeddings"; }
    std::filesystem::path adapters() const { return root / "adapters"; }
    std::filesystem::path runs() const { return root / "runs"; }
    std::filesystem::path fixtures() const { return root / "fixtures"; }
    std::filesystem::path reports() const { return root / "reports"; }

    void ensure_dirs() const;
};

// Write-temp-rename so partially written artifacts are never observed.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Run tags become file names; restrict to [A-Za-z0-9._-], non-empty.
bool is_valid_run_tag(const std::string& tag);

}  // namespace ragkit
