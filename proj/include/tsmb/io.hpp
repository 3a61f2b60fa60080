#pragma once

#include <filesystem>
#include <string>

namespace tsmb {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace tsmb
