// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Byte-level text helpers shared by the extractor, the grounder's consistency
// check and the answer checker. All case handling is ASCII-only.
namespace gcot::text {

std::string_view trim(std::string_view s);
std::string casefold(std::string_view s);

inline bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alnum(char c) { return is_ascii_alpha(c) || is_ascii_digit(c); }

/// Length in bytes of a currency symbol ($, £, €, ¥) starting at pos, or 0.
std::size_t currency_symbol_length(std::string_view s, std::size_t pos);

/// Matches the numeric grammar at pos: optional currency symbol, digits with
/// optional comma thousands separators, optional decimal part, optional '%'.
/// The token must not be glued to a letter or digit on either side.
/// Returns the end offset of the token, or nullopt.
std::optional<std::size_t> match_number(std::string_view s, std::size_t pos);

/// True if the whole string (after trimming) is one numeric-grammar token.
bool is_number_token(std::string_view s);

/// Strips currency symbols, thousands separators, '%' and whitespace, then
/// parses a plain decimal. Returns nullopt if anything else remains.
std::optional<double> parse_normalized_decimal(std::string_view s);

/// Every numeric-grammar token in s, in order.
std::vector<std::string_view> find_numbers(std::string_view s);

/// Case-folded alphanumeric tokens; punctuation acts as a separator.
std::vector<std::string> word_tokens(std::string_view s);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein / max(len); 1.0 for two empty strings.
double edit_similarity(std::string_view a, std::string_view b);

/// |a - b| <= rel * max(1, |a|, |b|)
bool nearly_equal(double a, double b, double rel);

}  // namespace gcot::text
