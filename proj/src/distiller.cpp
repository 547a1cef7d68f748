// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/distiller.hpp"

#include "gcot/concurrency.hpp"
#include "gcot/eval_harness.hpp"
#include "gcot/text_util.hpp"

namespace gcot {

namespace {

constexpr std::string_view kPromptTail =
    " Your task is to give a explanation for the question. Give step by step reasoning to get the answer, and when "
    "you're ready to answer, please use the format '*Answer*:'";

bool is_trailing_punct(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '*' || c == ')' || c == '"';
}

}  // namespace

std::string build_distill_prompt(const QASample& sample) {
    validate(sample);
    std::string prompt;
    prompt.reserve(kDistillPromptHead.size() + sample.question.size() + kPromptTail.size());
    prompt.append(kDistillPromptHead).append(sample.question).append(kPromptTail);
    return prompt;
}

std::optional<ParsedAnswer> try_parse_answer_marker(std::string_view cot_text) {
    const auto at = cot_text.rfind(kAnswerMarker);
    if (at == std::string_view::npos) return std::nullopt;
    auto rest = text::trim(cot_text.substr(at + kAnswerMarker.size()));
    // Markdown emphasis around the value: "*Answer*: **475**".
    while (!rest.empty() && rest.front() == '*') rest = text::trim(rest.substr(1));

    ParsedAnswer out;
    out.raw = std::string(rest);
    if (const auto end = text::match_number(rest, 0)) {
        const auto token = rest.substr(0, *end);
        out.numeric = std::string(token);
        const auto tail = rest.substr(*end);
        bool only_punct = true;
        for (char c : tail) {
            if (!is_trailing_punct(c) && c != ' ' && c != '\t' && c != '\n' && c != '\r') only_punct = false;
        }
        if (only_punct) out.raw = std::string(token);
    }
    return out;
}

ParsedAnswer parse_answer_marker(std::string_view cot_text) {
    if (auto parsed = try_parse_answer_marker(cot_text)) return *std::move(parsed);
    throw MarkerMissing("no '*Answer*:' marker in completion");
}

bool answer_matches(const ParsedAnswer& answer, std::string_view gold, bool relaxed) {
    if (answer.numeric && answers_equivalent(*answer.numeric, gold, relaxed)) return true;
    return answers_equivalent(answer.raw, gold, relaxed);
}

DistillResult distill(std::span<const QASample> samples, Gateway& gateway, const BackendProfile& profile,
                      const DistillOptions& options) {
    if (samples.empty()) throw InvalidArgument("distill needs at least one sample");
    struct Slot {
        std::optional<CoTRecord> record;
        std::optional<SampleFailure> failure;
    };
    std::vector<Slot> slots(samples.size());

    parallel_for(samples.size(), static_cast<std::size_t>(profile.max_in_flight), [&](std::size_t i) {
        const auto& sample = samples[i];
        try {
            std::optional<ImageAttachment> image;
            if (options.attach_image) image = attachment_from_file(sample.image.uri);
            const auto request = make_user_request(options.model, build_distill_prompt(sample), std::move(image),
                                                   kDefaultTemperature, options.max_tokens);
            CoTRecord rec;
            rec.sample_id = sample.sample_id;
            rec.source_model = options.model;
            rec.cot_text = gateway.complete(profile, request);
            if (const auto parsed = try_parse_answer_marker(rec.cot_text)) {
                rec.parsed_answer = parsed->preferred();
                rec.answer_ok = answer_matches(*parsed, sample.gold_answer, options.relaxed);
            }
            slots[i].record = std::move(rec);
        } catch (const Error& e) {
            slots[i].failure = SampleFailure{sample.sample_id, e.what()};
        }
    });

    DistillResult result;
    for (auto& slot : slots) {
        if (slot.record) result.records.push_back(std::move(*slot.record));
        if (slot.failure) result.failures.push_back(std::move(*slot.failure));
    }
    return result;
}

}  // namespace gcot
