#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small ASCII string helpers shared by the parsing and normalization code.
namespace mtc::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Splits on runs of ASCII whitespace; never yields empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

/// Splits on any of the delimiter characters; keeps empty pieces.
std::vector<std::string> split_any(std::string_view s, std::string_view delims);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lowercases, trims and collapses internal whitespace to single spaces.
std::string fold(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);
bool is_all_digits(std::string_view s);

}  // namespace mtc::text
