// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/grounder.hpp"

#include "gcot/text_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace gcot {

namespace {

// Absorbs representation error such as 0.3 * 1000 = 300.00000000000006.
constexpr double kPixelEpsilon = 1e-6;

std::size_t skip_spaces(std::string_view s, std::size_t p) {
    while (p < s.size() && (s[p] == ' ' || s[p] == '\t' || s[p] == '\n')) ++p;
    return p;
}

std::optional<std::pair<double, std::size_t>> parse_decimal_at(std::string_view s, std::size_t p) {
    std::size_t q = p;
    if (q < s.size() && (s[q] == '-' || s[q] == '+')) ++q;
    const std::size_t digits_from = q;
    while (q < s.size() && (text::is_ascii_digit(s[q]) || s[q] == '.')) ++q;
    if (q == digits_from) return std::nullopt;
    std::string_view token = s.substr(p, q - p);
    if (token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return std::pair{v, q};
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

bool contains_contiguous(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::string unreadable_reason(const std::exception& e, std::string_view stage) {
    return std::string(stage) + ": " + e.what();
}

}  // namespace

std::optional<Quadruple> find_quadruple(std::string_view text, std::size_t from) {
    for (auto open = text.find('[', from); open != std::string_view::npos; open = text.find('[', open + 1)) {
        Quadruple q;
        q.begin = open;
        std::size_t p = open + 1;
        bool ok = true;
        for (int k = 0; k < 4 && ok; ++k) {
            p = skip_spaces(text, p);
            const auto parsed = parse_decimal_at(text, p);
            if (!parsed) {
                ok = false;
                break;
            }
            q.values[k] = parsed->first;
            p = skip_spaces(text, parsed->second);
            const char expected = k < 3 ? ',' : ']';
            if (p >= text.size() || text[p] != expected) {
                ok = false;
                break;
            }
            ++p;
        }
        if (ok) {
            q.end = p;
            return q;
        }
    }
    return std::nullopt;
}

std::string grounding_prompt(const SubQuestion& subq) { return subq.prompt + " " + std::string(kGroundingInstruction); }

NBox request_box(const SubQuestion& subq, const ImageRef& image, const GroundingContext& ctx) {
    auto request = make_user_request(ctx.model, grounding_prompt(subq), attachment_from_file(image.uri),
                                     kDefaultTemperature, ctx.max_tokens);
    const auto completion = ctx.gateway.complete(ctx.profile, request);
    const auto quad = find_quadruple(completion);
    if (!quad) throw NoBoxInCompletion("no [x1, y1, x2, y2] in completion: " + completion.substr(0, 120));
    const auto& v = quad->values;
    return validate_nbox(v[0], v[1], v[2], v[3]);
}

PixelRect to_pixel_rect(const NBox& box, const ImageRef& image, double pad_frac) {
    if (!(pad_frac >= 0.0 && pad_frac <= kMaxCropPad)) throw InvalidArgument("pad_frac must lie in [0, 0.1]");
    const double w = image.width_px;
    const double h = image.height_px;
    const double left = std::floor((box.x1() - pad_frac) * w + kPixelEpsilon);
    const double top = std::floor((box.y1() - pad_frac) * h + kPixelEpsilon);
    const double right = std::ceil((box.x2() + pad_frac) * w - kPixelEpsilon);
    const double bottom = std::ceil((box.y2() + pad_frac) * h - kPixelEpsilon);
    const int x0 = static_cast<int>(std::clamp(left, 0.0, w));
    const int y0 = static_cast<int>(std::clamp(top, 0.0, h));
    const int x1 = static_cast<int>(std::clamp(right, 0.0, w));
    const int y1 = static_cast<int>(std::clamp(bottom, 0.0, h));
    const PixelRect rect{x0, y0, x1 - x0, y1 - y0};
    if (rect.w < kMinCropPx || rect.h < kMinCropPx) {
        throw CropTooSmall("crop " + std::to_string(rect.w) + "x" + std::to_string(rect.h) + " px is below " +
                           std::to_string(kMinCropPx) + " px");
    }
    return rect;
}

Bytes encode_crop(const GrayImage& source, const ImageRef& image, const PixelRect& rect) {
    const auto pixels = crop_image(source, rect.x, rect.y, rect.w, rect.h);
    const std::string provenance = image.id + "#" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
                                   std::to_string(rect.w) + "," + std::to_string(rect.h);
    return encode_png(pixels, {{std::string(kProvenanceKey), provenance}});
}

std::string read_crop(const PixelRect& rect, const ImageRef& image, const GroundingContext& ctx) {
    const auto source = decode_image(read_file_bytes(image.uri));
    if (rect.x < 0 || rect.y < 0 || rect.x + rect.w > source.width || rect.y + rect.h > source.height) {
        throw ImageDecodeError("crop rectangle exceeds decoded image " + std::to_string(source.width) + "x" +
                               std::to_string(source.height));
    }
    ImageAttachment crop{"image/png", encode_crop(source, image, rect)};
    auto request = make_user_request(ctx.model, std::string(kReadingPrompt), std::move(crop), kDefaultTemperature,
                                     ctx.max_tokens);
    return ctx.gateway.complete(ctx.profile, request);
}

Verdict check_consistency(const Target& target, std::string_view read_content) {
    const auto content = text::trim(read_content);
    if (content.empty()) return Verdict::unreadable;

    if (target.kind == TargetKind::number) {
        const auto expected = text::parse_normalized_decimal(target.surface);
        if (!expected) return Verdict::mismatch;
        auto same = [&](double v) {
            const double scale = std::max(std::fabs(v), std::fabs(*expected));
            return std::fabs(v - *expected) <= kNumberMatchTolerance * scale;
        };
        if (const auto whole = text::parse_normalized_decimal(content)) return same(*whole) ? Verdict::match : Verdict::mismatch;
        for (auto token : text::find_numbers(content)) {
            if (const auto v = text::parse_normalized_decimal(token); v && same(*v)) return Verdict::match;
        }
        return Verdict::mismatch;
    }

    const auto target_tokens = text::word_tokens(target.surface);
    const auto content_tokens = text::word_tokens(content);
    if (target_tokens.empty()) return Verdict::mismatch;
    if (content_tokens.empty()) return Verdict::unreadable;
    if (contains_contiguous(content_tokens, target_tokens)) return Verdict::match;
    if (text::edit_similarity(join(target_tokens), join(content_tokens)) >= kNounSimilarityThreshold) {
        return Verdict::match;
    }
    return Verdict::mismatch;
}

VerifiedBox ground_one(const SubQuestion& subq, const ImageRef& image, const GroundingContext& ctx, int iteration) {
    VerifiedBox out;
    out.sub_question = subq;
    out.iteration = iteration;
    out.verdict = Verdict::unreadable;
    try {
        out.box = request_box(subq, image, ctx);
    } catch (const Error& e) {
        out.failure = unreadable_reason(e, "request_box");
        return out;
    }
    try {
        const auto rect = to_pixel_rect(*out.box, image, ctx.pad_frac);
        out.read_content = read_crop(rect, image, ctx);
    } catch (const Error& e) {
        out.failure = unreadable_reason(e, "read_crop");
        return out;
    }
    out.verdict = check_consistency(subq.target, out.read_content);
    return out;
}

Verdict verify_box(const Target& target, const NBox& box, const ImageRef& image, const GroundingContext& ctx) {
    try {
        const auto rect = to_pixel_rect(box, image, ctx.pad_frac);
        return check_consistency(target, read_crop(rect, image, ctx));
    } catch (const Error&) {
        return Verdict::unreadable;
    }
}

}  // namespace gcot
