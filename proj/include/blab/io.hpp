#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace blab {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Parses a full string as a double; throws InvalidArgument otherwise.
double parse_double(std::string_view text);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace blab
