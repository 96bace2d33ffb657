#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fk {

// Shortest round-trip decimal form (std::to_chars); locale-free, so CSV
// bytes are identical across runs.
std::string format_double(double v);

std::string format_size(std::size_t v);

double parse_double(const std::string& s);

std::vector<std::string> split_csv_line(const std::string& line);

std::vector<std::string> split_lines(const std::string& text);

// Write-temp-then-rename so partially written outputs are never observed.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fk
