#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace habcast {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Fixed-point text with `decimals` digits and a configurable decimal separator.
std::string format_fixed(double value, int decimals, char decimal_separator = '.');

/// Writes through a temporary sibling file and renames, so readers never see partial output.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

std::string read_text_file(const std::filesystem::path& path);

} // namespace habcast
