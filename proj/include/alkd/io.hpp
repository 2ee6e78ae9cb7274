#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace alkd {

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe partial content.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& data);

// Strict integer parse; throws std::runtime_error mentioning `what` on failure.
long parse_long(const std::string& field, const std::string& what);
double parse_double(const std::string& field, const std::string& what);

std::vector<std::string> split_tabs(const std::string& line);

}  // namespace alkd
