// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/text_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace gcot::text {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t digit_run(std::string_view s, std::size_t pos) {
    std::size_t end = pos;
    while (end < s.size() && is_ascii_digit(s[end])) ++end;
    return end - pos;
}

}  // namespace

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string casefold(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::size_t currency_symbol_length(std::string_view s, std::size_t pos) {
    if (pos >= s.size()) return 0;
    const auto rest = s.substr(pos);
    if (rest.starts_with("$")) return 1;
    if (rest.starts_with("\xC2\xA3") || rest.starts_with("\xC2\xA5")) return 2;  // £ ¥
    if (rest.starts_with("\xE2\x82\xAC")) return 3;                              // €
    return 0;
}

std::optional<std::size_t> match_number(std::string_view s, std::size_t pos) {
    if (pos > 0 && is_ascii_alnum(s[pos - 1])) return std::nullopt;
    std::size_t p = pos + currency_symbol_length(s, pos);
    const std::size_t lead = digit_run(s, p);
    if (lead == 0) return std::nullopt;

    // Prefer a grouped integer part (1,234,567) when the grouping is well formed.
    std::size_t grouped_end = p + lead;
    if (lead <= 3) {
        std::size_t q = p + lead;
        while (q + 4 <= s.size() && s[q] == ',' && digit_run(s, q + 1) == 3) q += 4;
        grouped_end = q;
    }
    p = grouped_end;
    if (p + 1 < s.size() && s[p] == '.' && is_ascii_digit(s[p + 1])) {
        p += 1 + digit_run(s, p + 1);
    }
    if (p < s.size() && s[p] == '%') ++p;
    if (p < s.size() && is_ascii_alnum(s[p])) return std::nullopt;
    return p;
}

bool is_number_token(std::string_view s) {
    s = trim(s);
    if (s.empty()) return false;
    const auto end = match_number(s, 0);
    return end && *end == s.size();
}

std::optional<double> parse_normalized_decimal(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (const auto n = currency_symbol_length(s, i)) {
            i += n;
            continue;
        }
        const char c = s[i++];
        if (c == ',' || c == '%' || is_space(c)) continue;
        cleaned.push_back(c);
    }
    if (cleaned.empty()) return std::nullopt;
    // from_chars accepts a leading '-' but not '+'.
    std::string_view view = cleaned;
    if (view.front() == '+') view.remove_prefix(1);
    for (char c : view) {
        if (!is_ascii_digit(c) && c != '.' && c != '-') return std::nullopt;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
    if (ec != std::errc{} || ptr != view.data() + view.size()) return std::nullopt;
    return value;
}

std::vector<std::string_view> find_numbers(std::string_view s) {
    std::vector<std::string_view> out;
    for (std::size_t i = 0; i < s.size();) {
        if (const auto end = match_number(s, i)) {
            out.push_back(s.substr(i, *end - i));
            i = *end;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_ascii_alnum(c)) {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double edit_similarity(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

bool nearly_equal(double a, double b, double rel) {
    const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= rel * scale;
}

}  // namespace gcot::text
