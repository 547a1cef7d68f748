// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/assembler.hpp"
#include "gcot/synth_world.hpp"
#include "gcot/target_extractor.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

using namespace gcot;
using namespace gcot::testing;

namespace {

VerifiedBox match_box(const Target& t, const NBox& box, int index = 1) {
    return {{t, sub_question_prompt(t.surface), index}, box, t.surface, Verdict::match, 1, ""};
}

Target find_target(const std::vector<Target>& ts, std::string_view surface) {
    for (const auto& t : ts) {
        if (t.surface == surface) return t;
    }
    FAIL("target not found: " << surface);
    return {};
}

struct World {
    TempDir dir;
    std::shared_ptr<SynthWorld> world;
    explicit World(std::uint64_t seed = 31) : world(std::make_shared<SynthWorld>(generate_world(seed, 2, 4, dir.path()))) {}
};

Selection select_with(const World& w, std::vector<CandidateKind> script, std::vector<GCoTRecord>* candidates_out = nullptr,
                      std::size_t max_keep = 3) {
    OraclePolicy policy;
    policy.candidate_script = std::move(script);
    const auto profile = oracle_configure(w.world, policy);
    Gateway gw;
    const auto& sample = w.world->qa[0];
    GenerateOptions opts;
    opts.model = "m";
    auto candidates = generate_candidates(sample, gw, profile, opts);
    GroundingContext ctx{gw, profile, "m"};
    auto sel = verify_and_select(candidates, sample, ctx, max_keep);
    if (candidates_out) *candidates_out = std::move(candidates);
    return sel;
}

}  // namespace

TEST_CASE("box follows its target") {
    const std::string text = "The price of beef sauce is $1.85 per kilogram.";
    const CoTRecord cot{"s1", "t", text, std::nullopt, false, std::nullopt};
    const auto targets = extract_targets(text);
    const auto box = validate_nbox(0.021, 0.411, 0.331, 0.475);
    const std::vector<VerifiedBox> v{match_box(find_target(targets, "beef sauce"), box)};
    const auto g = inject_boxes(cot, v);
    CHECK(g.gcot_text == "The price of beef sauce [0.021, 0.411, 0.331, 0.475] is $1.85 per kilogram.");
    REQUIRE(g.boxes.size() == 1);
    CHECK(g.boxes[0].box == box);
    CHECK(g.origin == GCoTOrigin::assembled);
}

TEST_CASE("several boxes, spans shifted, strip recovers the CoT") {
    const std::string text = "Beef sauce costs $1.85 and ketchup costs $0.60. Beef sauce is dearer. *Answer*: 2.45";
    const CoTRecord cot{"s1", "t", text, "2.45", true, std::nullopt};
    const auto targets = extract_targets(text);
    std::vector<VerifiedBox> v;
    int i = 1;
    for (const auto& t : targets) {
        v.push_back(match_box(t, validate_nbox(0.1 * i, 0.1, 0.1 * i + 0.05123, 0.2), i));
        ++i;
    }
    // Reverse order must not matter.
    std::reverse(v.begin(), v.end());
    const auto g = inject_boxes(cot, v);
    REQUIRE(g.boxes.size() == targets.size());
    for (const auto& b : g.boxes) {
        CHECK(g.gcot_text.substr(b.target.span.start, b.target.span.size()) == b.target.surface);
        CHECK(g.gcot_text.compare(b.target.span.end, 2, " [") == 0);
    }
    CHECK(g.boxes[0].box == quantize(validate_nbox(0.1, 0.1, 0.15123, 0.2)));
    CHECK(strip_quadruples(g.gcot_text).text == text);
    CHECK(strip_quadruples(g.gcot_text).anchors.size() == targets.size());
    CHECK(g.answer_ok);
    CHECK(g.parsed_answer == "2.45");

    const auto parsed = parse_embedded_boxes(g.gcot_text);
    CHECK(parsed.unmatched == 0);
    CHECK(parsed.boxes == g.boxes);
}

TEST_CASE("first occurrence only") {
    const std::string text = "beef sauce then Beef Sauce";
    const CoTRecord cot{"s", "t", text, std::nullopt, false, std::nullopt};
    const Target first{"beef sauce", TargetKind::noun, {0, 10}};
    const Target second{"Beef Sauce", TargetKind::noun, {16, 26}};
    const auto box = validate_nbox(0.1, 0.1, 0.2, 0.2);
    const std::vector<VerifiedBox> v{match_box(second, box), match_box(first, box)};
    const auto g = inject_boxes(cot, v);
    CHECK(g.gcot_text == "beef sauce [0.100, 0.100, 0.200, 0.200] then Beef Sauce");
    CHECK(g.boxes.size() == 1);
}

TEST_CASE("injection errors") {
    const CoTRecord cot{"s", "t", "beef sauce is here", std::nullopt, false, std::nullopt};
    const auto box = validate_nbox(0.1, 0.1, 0.2, 0.2);
    const std::vector<VerifiedBox> drift{match_box({"beef sauce", TargetKind::noun, {1, 11}}, box)};
    CHECK_THROWS_AS(inject_boxes(cot, drift), SpanDrift);
    const std::vector<VerifiedBox> out_of_range{match_box({"beef sauce", TargetKind::noun, {15, 25}}, box)};
    CHECK_THROWS_AS(inject_boxes(cot, out_of_range), SpanDrift);
    auto bad = match_box({"beef sauce", TargetKind::noun, {0, 10}}, box);
    bad.verdict = Verdict::mismatch;
    CHECK_THROWS_AS(inject_boxes(cot, std::vector<VerifiedBox>{bad}), InvalidArgument);
    bad.verdict = Verdict::match;
    bad.box.reset();
    CHECK_THROWS_AS(inject_boxes(cot, std::vector<VerifiedBox>{bad}), InvalidArgument);
    const std::vector<VerifiedBox> overlap{match_box({"beef sauce", TargetKind::noun, {0, 10}}, box),
                                           match_box({"sauce", TargetKind::noun, {5, 10}}, box)};
    CHECK_THROWS_AS(inject_boxes(cot, overlap), InvalidArgument);
    CHECK(inject_boxes(cot, std::vector<VerifiedBox>{}).gcot_text == cot.cot_text);
}

TEST_CASE("embedded box parsing") {
    const auto e = parse_embedded_boxes("The ketchup [0.1, 0.2, 0.3, 0.4] costs $0.60 [0.5, 0.2, 0.6, 0.4]. *Answer*: 0.60");
    REQUIRE(e.boxes.size() == 2);
    CHECK(e.boxes[0].target.surface == "ketchup");
    CHECK(e.boxes[1].target.surface == "$0.60");
    CHECK(e.boxes[1].target.span.start == 39);
    CHECK(e.unmatched == 0);
    // A box after a stopword, and a degenerate one.
    const auto u = parse_embedded_boxes("It is [0.1, 0.2, 0.3, 0.4] and ketchup [0.3, 0.2, 0.3, 0.4]");
    CHECK(u.boxes.empty());
    CHECK(u.unmatched == 2);
    CHECK(parse_embedded_boxes("no boxes at all").boxes.empty());
}

TEST_CASE("generation prompt and seeds") {
    World w;
    OraclePolicy policy;
    const auto profile = oracle_configure(w.world, policy);
    auto spy = std::make_shared<ScriptOracle>([&](const ChatRequest& r) { return profile.oracle->answer(r); });
    Gateway gw;
    GenerateOptions opts;
    opts.model = "m";
    opts.k = 4;
    opts.base_seed = 10;
    const auto c = generate_candidates(w.world->qa[0], gw, oracle_profile(spy), opts);
    CHECK(c.size() == 4);
    std::vector<std::uint64_t> seeds;
    for (const auto& r : spy->requests()) {
        seeds.push_back(*r.seed);
        CHECK(r.temperature == 0.8);
        CHECK(r.all_text() == w.world->qa[0].question +
                                  " Reason step by step, give the bounding box coordinate [x1, y1, x2, y2] right after "
                                  "each key item you read from the image, and finish with the format '*Answer*:'");
    }
    std::sort(seeds.begin(), seeds.end());
    CHECK(seeds == std::vector<std::uint64_t>{10, 11, 12, 13});
    for (const auto& r : c) {
        CHECK(r.origin == GCoTOrigin::self_generated);
        CHECK(r.answer_ok);
        CHECK(r.boxes.size() == 4);
    }
}

TEST_CASE("failed candidate requests are skipped") {
    World w;
    auto flaky = std::make_shared<ScriptOracle>([](const ChatRequest& r) -> std::string {
        if (*r.seed % 2) throw TransportError("reset");
        return "*Answer*: 1";
    });
    Gateway gw;
    GenerateOptions opts;
    opts.model = "m";
    opts.k = 6;
    CHECK(generate_candidates(w.world->qa[0], gw, oracle_profile(flaky), opts).size() == 3);
}

TEST_CASE("five correct of eight keeps exactly three, in order") {
    World w;
    using K = CandidateKind;
    std::vector<GCoTRecord> cands;
    const auto sel = select_with(w, {K::correct, K::wrong_answer, K::correct, K::bad_box, K::correct, K::no_marker,
                                     K::correct, K::correct},
                                 &cands);
    REQUIRE(cands.size() == 8);
    REQUIRE(sel.kept.size() == 3);
    CHECK(sel.kept[0].gcot_text == cands[0].gcot_text);
    CHECK(sel.kept[1].gcot_text == cands[2].gcot_text);
    CHECK(sel.kept[2].gcot_text == cands[4].gcot_text);
    CHECK(sel.shortfall == 0);
    REQUIRE(sel.rejections.size() == 3);
    CHECK(sel.rejections[0].starts_with("1: answer"));
    CHECK(sel.rejections[1].starts_with("3: box for"));
    CHECK(sel.rejections[2].starts_with("5: no answer marker"));
    for (const auto& k : sel.kept) {
        CHECK(k.answer_ok);
        CHECK(k.boxes_ok);
    }
}

TEST_CASE("a correct answer with one bad box is rejected") {
    World w;
    std::vector<GCoTRecord> cands;
    const auto sel = select_with(w, {CandidateKind::bad_box}, &cands);
    CHECK(sel.kept.empty());
    CHECK(sel.shortfall == 3);
    REQUIRE(cands.size() == 8);
    CHECK(cands[0].answer_ok);
    CHECK(sel.rejections.size() == 8);
}

TEST_CASE("one correct of eight keeps one with a shortfall of two") {
    World w;
    using K = CandidateKind;
    const auto sel = select_with(w, {K::wrong_answer, K::no_marker, K::bad_box, K::wrong_answer, K::no_marker,
                                     K::correct, K::bad_box, K::wrong_answer});
    CHECK(sel.kept.size() == 1);
    CHECK(sel.shortfall == 2);
    CHECK(sel.rejections.size() == 7);
}

TEST_CASE("zero boxes pass the box check") {
    World w;
    auto plain = std::make_shared<ScriptOracle>([](const ChatRequest&) { return std::string("x"); });
    Gateway gw;
    const auto profile = oracle_profile(plain);
    GroundingContext ctx{gw, profile, "m"};
    const auto& s = w.world->qa[0];
    GCoTRecord r;
    r.sample_id = s.sample_id;
    r.gcot_text = "Adding up. *Answer*: " + s.gold_answer;
    const std::vector<GCoTRecord> one{r};
    CHECK(verify_and_select(one, s, ctx).kept.size() == 1);
    CHECK(plain->requests().empty());
}
