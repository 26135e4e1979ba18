#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace polar::io {

// Shortest decimal text that reads back to the same double. Always carries a
// '.', exponent or special marker so JSON readers keep it floating-point.
std::string format_double(double x);

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view contents);

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

}  // namespace polar::io

namespace polar::io {

// Shortest round-trip text for CSV cells, no padding.
std::string csv_double(double x);

}  // namespace polar::io
