// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/core_model.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace gcot {

inline constexpr std::size_t kMaxTargetsPerCoT = 12;
inline constexpr std::size_t kMaxNounTokens = 4;

/// Stopwords plus verb blocklist; words in either never become noun targets.
class Lexicon {
public:
    /// Lists compiled in from data/stopwords.txt and data/verb_blocklist.txt.
    static const Lexicon& builtin();
    /// One token per line, UTF-8; blank lines and '#' comments ignored.
    static Lexicon from_files(const std::filesystem::path& stopwords, const std::filesystem::path& verbs);
    static Lexicon from_text(std::string_view stopwords, std::string_view verbs);

    bool is_stopword(std::string_view casefolded) const;
    bool is_blocked_verb(std::string_view casefolded) const;
    bool blocks(std::string_view casefolded) const { return is_stopword(casefolded) || is_blocked_verb(casefolded); }

    std::size_t stopword_count() const { return stopwords_.size(); }
    std::size_t verb_count() const { return verbs_.size(); }

private:
    std::unordered_set<std::string> stopwords_;
    std::unordered_set<std::string> verbs_;
};

struct ExtractOptions {
    std::size_t max_targets = kMaxTargetsPerCoT;
    /// Ignore the final-answer trailer (last "*Answer*:" onwards); the answer is
    /// derived, not read off the image.
    bool skip_answer_trailer = true;
    /// Keep only the first occurrence of each case-folded surface.
    bool dedup = true;
};

/// Nouns (maximal runs of non-blocked alphabetic words, split into chunks of at
/// most four) and numbers, deduplicated by case-folded surface, in order of
/// first occurrence.
std::vector<Target> extract_targets(std::string_view cot_text, const ExtractOptions& options = {},
                                    const Lexicon& lexicon = Lexicon::builtin());

/// "Where is the <surface>?"
std::string sub_question_prompt(std::string_view surface);

std::vector<SubQuestion> build_sub_questions(std::span<const Target> targets);

}  // namespace gcot
