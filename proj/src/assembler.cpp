// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/assembler.hpp"

#include "gcot/concurrency.hpp"
#include "gcot/distiller.hpp"
#include "gcot/target_extractor.hpp"
#include "gcot/text_util.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <unordered_set>

namespace gcot {

GCoTRecord inject_boxes(const CoTRecord& cot, std::span<const VerifiedBox> verified) {
    struct Insert {
        Target target;
        std::string text;
        NBox box;
    };
    std::vector<Insert> inserts;
    std::unordered_set<std::string> seen;
    std::vector<const VerifiedBox*> ordered;
    for (const auto& v : verified) ordered.push_back(&v);
    std::stable_sort(ordered.begin(), ordered.end(), [](const VerifiedBox* a, const VerifiedBox* b) {
        return a->sub_question.target.span.start < b->sub_question.target.span.start;
    });
    for (const auto* v : ordered) {
        const auto& t = v->sub_question.target;
        if (v->verdict != Verdict::match) throw InvalidArgument("only match-verdict boxes can be injected");
        if (!v->box) throw InvalidArgument("verified box for '" + t.surface + "' carries no coordinates");
        if (t.span.end > cot.cot_text.size() || t.span.end < t.span.start ||
            cot.cot_text.compare(t.span.start, t.span.size(), t.surface) != 0) {
            throw SpanDrift("span [" + std::to_string(t.span.start) + ", " + std::to_string(t.span.end) +
                            ") no longer spells '" + t.surface + "' in " + cot.sample_id);
        }
        if (!seen.insert(text::casefold(t.surface)).second) continue;
        if (!inserts.empty() && t.span.start < inserts.back().target.span.end) {
            throw InvalidArgument("overlapping target spans in " + cot.sample_id);
        }
        const auto box = quantize(*v->box);
        inserts.push_back({t, " " + format_nbox(box), box});
    }

    GCoTRecord out;
    out.sample_id = cot.sample_id;
    out.gcot_text = cot.cot_text;
    out.parsed_answer = cot.parsed_answer;
    out.answer_ok = cot.answer_ok;
    out.boxes_ok = true;
    out.origin = GCoTOrigin::assembled;
    for (auto it = inserts.rbegin(); it != inserts.rend(); ++it) out.gcot_text.insert(it->target.span.end, it->text);

    std::size_t shift = 0;
    for (const auto& ins : inserts) {
        Target t = ins.target;
        t.span = {t.span.start + shift, t.span.end + shift};
        out.boxes.push_back({std::move(t), ins.box});
        shift += ins.text.size();
    }
    return out;
}

StrippedText strip_quadruples(std::string_view text) {
    StrippedText out;
    std::size_t pos = 0;
    while (const auto q = find_quadruple(text, pos)) {
        std::size_t cut = q->begin;
        if (cut > pos && text[cut - 1] == ' ') --cut;
        out.text.append(text.substr(pos, cut - pos));
        out.anchors.emplace_back(out.text.size(), q->values);
        pos = q->end;
    }
    out.text.append(text.substr(pos));
    return out;
}

EmbeddedBoxes parse_embedded_boxes(std::string_view gcot_text) {
    EmbeddedBoxes out;
    // Offsets of removed text, needed to map stripped spans back into gcot_text.
    std::vector<std::pair<std::size_t, std::size_t>> removed;
    {
        std::size_t pos = 0;
        std::size_t stripped_len = 0;
        while (const auto q = find_quadruple(gcot_text, pos)) {
            std::size_t cut = q->begin;
            if (cut > pos && gcot_text[cut - 1] == ' ') --cut;
            stripped_len += cut - pos;
            removed.emplace_back(stripped_len, q->end - cut);
            pos = q->end;
        }
    }
    if (removed.empty()) return out;

    const auto stripped = strip_quadruples(gcot_text);
    ExtractOptions all;
    all.max_targets = std::numeric_limits<std::size_t>::max();
    all.skip_answer_trailer = false;
    all.dedup = false;
    const auto targets = extract_targets(stripped.text, all);

    auto to_original = [&](std::size_t p) {
        std::size_t shift = 0;
        for (const auto& [at, len] : removed) {
            if (at <= p) shift += len;
        }
        return p + shift;
    };

    for (const auto& [offset, values] : stripped.anchors) {
        const auto it = std::find_if(targets.begin(), targets.end(),
                                     [&](const Target& t) { return t.span.end == offset; });
        if (it == targets.end()) {
            ++out.unmatched;
            continue;
        }
        try {
            const auto box = validate_nbox(values[0], values[1], values[2], values[3]);
            Target t = *it;
            t.span = {to_original(t.span.start), to_original(t.span.start) + t.span.size()};
            out.boxes.push_back({std::move(t), box});
        } catch (const DegenerateBox&) {
            ++out.unmatched;
        }
    }
    return out;
}

std::string generation_prompt(const QASample& sample) {
    return sample.question + " " + std::string(kGenerationInstruction);
}

std::vector<GCoTRecord> generate_candidates(const QASample& sample, Gateway& gateway, const BackendProfile& profile,
                                            const GenerateOptions& options) {
    if (options.k < 1) throw InvalidArgument("candidate count k must be >= 1");
    validate(sample);
    const auto image = attachment_from_file(sample.image.uri);
    const auto prompt = generation_prompt(sample);
    std::vector<std::optional<GCoTRecord>> slots(static_cast<std::size_t>(options.k));

    parallel_for(slots.size(), static_cast<std::size_t>(profile.max_in_flight), [&](std::size_t i) {
        auto request = make_user_request(options.model, prompt, image, options.temperature, options.max_tokens);
        request.seed = options.base_seed + i;
        std::string text;
        try {
            text = gateway.complete(profile, request);
        } catch (const TransportError&) {
            return;
        } catch (const ProtocolError&) {
            return;
        }
        GCoTRecord rec;
        rec.sample_id = sample.sample_id;
        rec.origin = GCoTOrigin::self_generated;
        if (const auto parsed = try_parse_answer_marker(text)) {
            rec.parsed_answer = parsed->preferred();
            rec.answer_ok = answer_matches(*parsed, sample.gold_answer, options.relaxed);
        }
        rec.boxes = parse_embedded_boxes(text).boxes;
        rec.gcot_text = std::move(text);
        slots[i] = std::move(rec);
    });

    std::vector<GCoTRecord> out;
    for (auto& s : slots) {
        if (s) out.push_back(std::move(*s));
    }
    return out;
}

Selection verify_and_select(std::span<const GCoTRecord> candidates, const QASample& sample,
                            const GroundingContext& ctx, std::size_t max_keep, bool relaxed) {
    std::vector<std::string> reasons(candidates.size());

    parallel_for(candidates.size(), static_cast<std::size_t>(ctx.profile.max_in_flight), [&](std::size_t i) {
        const auto& c = candidates[i];
        const auto parsed = try_parse_answer_marker(c.gcot_text);
        if (!parsed) {
            reasons[i] = "no answer marker";
            return;
        }
        if (!answer_matches(*parsed, sample.gold_answer, relaxed)) {
            reasons[i] = "answer '" + parsed->preferred() + "' does not match gold '" + sample.gold_answer + "'";
            return;
        }
        const auto embedded = parse_embedded_boxes(c.gcot_text);
        if (embedded.unmatched > 0) {
            reasons[i] = std::to_string(embedded.unmatched) + " box(es) not attached to a target";
            return;
        }
        for (const auto& b : embedded.boxes) {
            const auto verdict = verify_box(b.target, b.box, sample.image, ctx);
            if (verdict != Verdict::match) {
                reasons[i] = "box for '" + b.target.surface + "' is " + std::string(to_string(verdict));
                return;
            }
        }
    });

    Selection out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!reasons[i].empty()) {
            out.rejections.push_back(std::to_string(i) + ": " + reasons[i]);
            continue;
        }
        if (out.kept.size() >= max_keep) continue;
        auto rec = candidates[i];
        rec.answer_ok = true;
        rec.boxes_ok = true;
        out.kept.push_back(std::move(rec));
    }
    out.shortfall = max_keep - out.kept.size();
    return out;
}

}  // namespace gcot
