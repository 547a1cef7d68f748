// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/core_model.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gcot {

std::string build_distill_prompt(const QASample& sample);

/// Final answer after the last "*Answer*:" marker.
struct ParsedAnswer {
    /// Trailing text, trimmed. Collapses to the numeric token when nothing but
    /// punctuation follows it.
    std::string raw;
    /// Leading numeric token of raw, when raw starts with one.
    std::optional<std::string> numeric;

    /// The value handed to the answer checker: numeric when present.
    const std::string& preferred() const { return numeric ? *numeric : raw; }

    bool operator==(const ParsedAnswer&) const = default;
};

/// Throws MarkerMissing when the text has no "*Answer*:" marker.
ParsedAnswer parse_answer_marker(std::string_view cot_text);

/// Like parse_answer_marker, but nullopt instead of MarkerMissing.
std::optional<ParsedAnswer> try_parse_answer_marker(std::string_view cot_text);

bool answer_matches(const ParsedAnswer& answer, std::string_view gold, bool relaxed = false);

struct DistillOptions {
    std::string model;
    int max_tokens = kDefaultMaxTokens;
    bool relaxed = false;
    bool attach_image = true;
};

struct SampleFailure {
    std::string sample_id;
    std::string reason;

    bool operator==(const SampleFailure&) const = default;
};

struct DistillResult {
    std::vector<CoTRecord> records;  // input order, failed samples omitted
    std::vector<SampleFailure> failures;
};

/// One request per sample, fanned out up to the profile's in-flight bound.
/// Transport and protocol failures are recorded per sample; the batch continues.
DistillResult distill(std::span<const QASample> samples, Gateway& gateway, const BackendProfile& profile,
                      const DistillOptions& options);

}  // namespace gcot
