#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Locale-independent number formatting and parsing.
namespace fm::text {

/// 17 significant digits, '.' decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double value);
/// Shortest string that parses back to the same double.
std::string format_shortest(double value);

/// Accepts exactly what the formatters above produce (plus leading '+'
/// and surrounding whitespace). Throws std::invalid_argument otherwise.
double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);
bool parse_bool(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delimiter);

}  // namespace fm::text
