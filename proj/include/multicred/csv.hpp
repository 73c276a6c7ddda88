#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multicred::csv {

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);

/// Splits on commas; no quoting (fields written by this library never need it).
std::vector<std::string_view> split_line(std::string_view line);

/// Lines without trailing '\r'; a final empty line is dropped.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace multicred::csv
