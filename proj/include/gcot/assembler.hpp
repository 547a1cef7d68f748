// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/core_model.hpp"
#include "gcot/grounder.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gcot {

inline constexpr int kDefaultCandidates = 8;
inline constexpr std::size_t kDefaultMaxKeep = 3;

/// Inserts " [x1, y1, x2, y2]" after each verified target (first occurrence
/// only), right to left so earlier offsets stay valid. Boxes are quantized to
/// three decimals. Throws SpanDrift if a span no longer spells its surface and
/// InvalidArgument for a non-match verdict or a missing box.
GCoTRecord inject_boxes(const CoTRecord& cot, std::span<const VerifiedBox> verified);

/// Text with every " [a, b, c, d]" removed, plus where each one sat.
struct StrippedText {
    std::string text;
    /// Offsets into `text` at which a quadruple was removed, with its values.
    std::vector<std::pair<std::size_t, std::array<double, 4>>> anchors;
};

StrippedText strip_quadruples(std::string_view text);

/// Pairs each embedded quadruple with the target that ends right before it.
/// Spans index into `gcot_text`. Quadruples with no such target, or that do
/// not form a valid box, are reported in `unmatched`.
struct EmbeddedBoxes {
    std::vector<AnnotatedBox> boxes;
    std::size_t unmatched = 0;
};

EmbeddedBoxes parse_embedded_boxes(std::string_view gcot_text);

/// Question followed by the grounded-reasoning instruction.
std::string generation_prompt(const QASample& sample);

struct GenerateOptions {
    std::string model;
    int k = kDefaultCandidates;
    double temperature = kGenerationTemperature;
    /// Candidate i is requested with seed base_seed + i.
    std::uint64_t base_seed = 0;
    int max_tokens = kDefaultMaxTokens;
    bool relaxed = false;
};

/// k completions, parsed for the answer marker and embedded boxes, in
/// generation order. A candidate whose request fails is skipped.
std::vector<GCoTRecord> generate_candidates(const QASample& sample, Gateway& gateway, const BackendProfile& profile,
                                            const GenerateOptions& options);

struct Selection {
    std::vector<GCoTRecord> kept;
    std::size_t shortfall = 0;
    /// One line per rejected candidate: "<index>: <reason>".
    std::vector<std::string> rejections;
};

/// Keeps the first max_keep candidates whose answer matches the gold and whose
/// every embedded box re-verifies against the target before it. Zero boxes
/// pass the box check vacuously.
Selection verify_and_select(std::span<const GCoTRecord> candidates, const QASample& sample,
                            const GroundingContext& ctx, std::size_t max_keep = kDefaultMaxKeep,
                            bool relaxed = false);

}  // namespace gcot
