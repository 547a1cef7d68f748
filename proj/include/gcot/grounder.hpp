// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/core_model.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace gcot {

inline constexpr double kDefaultCropPad = 0.02;
inline constexpr double kMaxCropPad = 0.1;
inline constexpr int kMinCropPx = 8;
inline constexpr double kNounSimilarityThreshold = 0.9;
inline constexpr double kNumberMatchTolerance = 1e-6;

/// Keyword of the PNG tEXt chunk naming the source image of a crop:
/// "<image id>#<x>,<y>,<w>,<h>" for crops, "<image id>" for full images.
inline constexpr std::string_view kProvenanceKey = "Source";

struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const PixelRect&) const = default;
};

/// Everything a grounding call needs besides the sub-question.
struct GroundingContext {
    Gateway& gateway;
    const BackendProfile& profile;
    std::string model;
    double pad_frac = kDefaultCropPad;
    int max_tokens = kDefaultMaxTokens;
};

/// A bracketed decimal quadruple found in text: [a, b, c, d].
struct Quadruple {
    std::array<double, 4> values{};
    std::size_t begin = 0;  // offset of '['
    std::size_t end = 0;    // one past ']'
};

/// First "[a, b, c, d]" at or after `from`.
std::optional<Quadruple> find_quadruple(std::string_view text, std::size_t from = 0);

/// Sub-question followed by the grounding instruction.
std::string grounding_prompt(const SubQuestion& subq);

/// Throws NoBoxInCompletion or DegenerateBox; transport errors propagate.
NBox request_box(const SubQuestion& subq, const ImageRef& image, const GroundingContext& ctx);

/// Pads by pad_frac of the image size per side, clamps, floors the top-left and
/// ceils the bottom-right edge. Throws CropTooSmall below 8 px per side.
PixelRect to_pixel_rect(const NBox& box, const ImageRef& image, double pad_frac = kDefaultCropPad);

/// PNG of the cropped pixels, tagged with its provenance chunk.
Bytes encode_crop(const GrayImage& source, const ImageRef& image, const PixelRect& rect);

/// Crops, re-encodes as PNG and asks the model what the region contains.
/// Throws ImageDecodeError; transport errors propagate.
std::string read_crop(const PixelRect& rect, const ImageRef& image, const GroundingContext& ctx);

/// Numbers compare as decimals after stripping currency, separators and '%';
/// nouns by contiguous token containment or edit similarity >= 0.9.
Verdict check_consistency(const Target& target, std::string_view read_content);

/// request_box -> to_pixel_rect -> read_crop -> check_consistency. Never throws
/// for model or image errors; they fold into the verdict and `failure`.
VerifiedBox ground_one(const SubQuestion& subq, const ImageRef& image, const GroundingContext& ctx, int iteration);

/// Re-verifies a box proposed for a target (used on self-generated GCoT).
Verdict verify_box(const Target& target, const NBox& box, const ImageRef& image, const GroundingContext& ctx);

}  // namespace gcot
