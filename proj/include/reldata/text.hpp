#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace reldata::text {

/// NFC normalization followed by locale-independent full lowercasing.
/// Throws DataError on invalid UTF-8.
std::string nfc_lower(std::string_view utf8);

/// Splits a UTF-8 string into one substring per code point.
std::vector<std::string> code_points(std::string_view utf8);

/// Strips leading/trailing ASCII whitespace.
std::string_view trim(std::string_view s) noexcept;

/// Splits on runs of ASCII whitespace; empty tokens dropped.
std::vector<std::string> split_whitespace(std::string_view s);

/// Splits on a literal separator; keeps empty pieces.
std::vector<std::string> split(std::string_view s, std::string_view sep);

/// nfc_lower, trim and collapse internal whitespace to single spaces.
std::string normalize_query(std::string_view utf8);

bool is_valid_utf8(std::string_view s) noexcept;

}  // namespace reldata::text
