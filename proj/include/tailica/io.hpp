#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tailica::io {

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);

/// Parses a decimal with optional sign; surrounding blanks are ignored.
/// Returns false on anything else, including trailing garbage.
bool parse_double(std::string_view text, double& value);

/// Splits one CSV line on commas (no quoting) and trims blanks and a trailing CR.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view text);

}  // namespace tailica::io
