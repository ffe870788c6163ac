#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace compatnet::io {

/// Shortest text that parses back to exactly `value` is not guaranteed by
/// iostreams, so doubles are always written with 17 significant digits.
std::string format_double(double value);

/// Strict decimal parse of the whole field. Returns false on any trailing junk.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

/// Splits one CSV line on commas. Fields are opaque; no quoting support.
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads all lines of a text file, stripping trailing '\r'. Throws
/// std::runtime_error if the file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes `content` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace compatnet::io
