#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace confdetect::io {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Strict full-token parse; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim_eol(std::string_view line);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace confdetect::io
