// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/target_extractor.hpp"

#include "gcot/backend_gateway.hpp"
#include "gcot/text_util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace gcot {

namespace {

#include "lexicon_data.inc"

std::unordered_set<std::string> parse_word_list(std::string_view text) {
    std::unordered_set<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text::trim(text.substr(pos, nl - pos));
        if (!line.empty() && line.front() != '#') out.insert(text::casefold(line));
        pos = nl + 1;
    }
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read word list " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct WordToken {
    std::size_t start;
    std::size_t end;
    bool eligible;
};

}  // namespace

const Lexicon& Lexicon::builtin() {
    static const Lexicon lexicon = from_text(kStopwordsData, kVerbBlocklistData);
    return lexicon;
}

Lexicon Lexicon::from_text(std::string_view stopwords, std::string_view verbs) {
    Lexicon lex;
    lex.stopwords_ = parse_word_list(stopwords);
    lex.verbs_ = parse_word_list(verbs);
    return lex;
}

Lexicon Lexicon::from_files(const std::filesystem::path& stopwords, const std::filesystem::path& verbs) {
    return from_text(slurp(stopwords), slurp(verbs));
}

bool Lexicon::is_stopword(std::string_view w) const { return stopwords_.contains(std::string(w)); }
bool Lexicon::is_blocked_verb(std::string_view w) const { return verbs_.contains(std::string(w)); }

std::vector<Target> extract_targets(std::string_view text, const ExtractOptions& options, const Lexicon& lexicon) {
    std::size_t limit = text.size();
    if (options.skip_answer_trailer) {
        if (const auto at = text.rfind(kAnswerMarker); at != std::string_view::npos) limit = at;
    }

    std::vector<Target> found;
    std::vector<WordToken> run;

    auto flush_run = [&] {
        for (std::size_t i = 0; i < run.size(); i += kMaxNounTokens) {
            const std::size_t last = std::min(run.size(), i + kMaxNounTokens) - 1;
            const Span span{run[i].start, run[last].end};
            found.push_back({std::string(text.substr(span.start, span.size())), TargetKind::noun, span});
        }
        run.clear();
    };

    std::size_t i = 0;
    while (i < limit) {
        const char c = text[i];
        if (const auto end = text::match_number(text, i); end && *end <= limit) {
            flush_run();
            found.push_back({std::string(text.substr(i, *end - i)), TargetKind::number, {i, *end}});
            i = *end;
            continue;
        }
        if (text::is_ascii_alpha(c)) {
            std::size_t j = i;
            while (j < limit && text::is_ascii_alpha(text[j])) ++j;
            bool contraction = false;
            // Possessives and contractions ("let's", "Felix's") are never targets.
            while (j + 1 < limit && text[j] == '\'' && text::is_ascii_alpha(text[j + 1])) {
                contraction = true;
                j += 2;
                while (j < limit && text::is_ascii_alpha(text[j])) ++j;
            }
            if (j < limit && text::is_ascii_digit(text[j])) contraction = true;  // "A4", "Q3"
            const auto word = text::casefold(text.substr(i, j - i));
            const bool eligible = !contraction && word.size() >= 2 && !lexicon.blocks(word);
            if (!eligible) {
                flush_run();
            } else {
                // Runs continue across spaces and tabs only.
                bool joined = !run.empty();
                for (std::size_t k = run.empty() ? i : run.back().end; joined && k < i; ++k) {
                    if (text[k] != ' ' && text[k] != '\t') joined = false;
                }
                if (!joined) flush_run();
                run.push_back({i, j, true});
            }
            i = j;
            continue;
        }
        if (c != ' ' && c != '\t') flush_run();
        ++i;
    }
    flush_run();

    std::sort(found.begin(), found.end(), [](const Target& a, const Target& b) { return a.span.start < b.span.start; });
    std::vector<Target> out;
    std::unordered_set<std::string> seen;
    for (auto& t : found) {
        if (out.size() >= options.max_targets) break;
        if (!options.dedup || seen.insert(text::casefold(t.surface)).second) out.push_back(std::move(t));
    }
    return out;
}

std::string sub_question_prompt(std::string_view surface) { return "Where is the " + std::string(surface) + "?"; }

std::vector<SubQuestion> build_sub_questions(std::span<const Target> targets) {
    std::vector<SubQuestion> out;
    out.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out.push_back({targets[i], sub_question_prompt(targets[i].surface), static_cast<int>(i + 1)});
    }
    return out;
}

}  // namespace gcot
