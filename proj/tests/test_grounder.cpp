// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/grounder.hpp"
#include "gcot/target_extractor.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gcot;
using namespace gcot::testing;

namespace {

ImageRef big_image(int w = 1000, int h = 800) { return {"img", "unused.png", w, h}; }

Target noun(std::string s) { return {std::move(s), TargetKind::noun, {}}; }
Target number(std::string s) { return {std::move(s), TargetKind::number, {}}; }

SubQuestion subq_for(Target t) {
    const auto prompt = sub_question_prompt(t.surface);
    return {std::move(t), prompt, 1};
}

/// 200x100 white image written to disk.
ImageRef write_blank(const TempDir& dir) {
    const auto path = dir / "blank.png";
    const auto png = encode_png(GrayImage(200, 100), {{"Source", "blank"}});
    spit(path, std::string(png.begin(), png.end()));
    return {"blank", path, 200, 100};
}

}  // namespace

TEST_CASE("pixel rect arithmetic") {
    const auto box = validate_nbox(0.1, 0.2, 0.3, 0.4);
    CHECK(to_pixel_rect(box, big_image(), 0.0) == PixelRect{100, 160, 200, 160});
    CHECK(to_pixel_rect(box, big_image(), 0.02) == PixelRect{80, 144, 240, 192});
    CHECK_THROWS_AS(to_pixel_rect(validate_nbox(0.001, 0.001, 0.004, 0.004), big_image(), 0.0), CropTooSmall);
    CHECK_THROWS_AS(to_pixel_rect(box, big_image(), 0.2), InvalidArgument);
    CHECK_THROWS_AS(to_pixel_rect(box, big_image(), -0.01), InvalidArgument);
}

TEST_CASE("padding clamps to the image") {
    const auto r = to_pixel_rect(validate_nbox(0.0, 0.0, 0.05, 0.05), big_image(), 0.1);
    CHECK(r == PixelRect{0, 0, 150, 120});
    const auto e = to_pixel_rect(validate_nbox(0.95, 0.95, 1.0, 1.0), big_image(), 0.1);
    CHECK(e.x + e.w == 1000);
    CHECK(e.y + e.h == 800);
}

TEST_CASE("pixel rect inverts normalization") {
    std::mt19937 gen(3);
    for (int i = 0; i < 300; ++i) {
        const int W = 50 + static_cast<int>(gen() % 1500), H = 50 + static_cast<int>(gen() % 1500);
        const int w = 8 + static_cast<int>(gen() % (W - 8)), h = 8 + static_cast<int>(gen() % (H - 8));
        const int x = static_cast<int>(gen() % (W - w + 1)), y = static_cast<int>(gen() % (H - h + 1));
        const auto box = validate_nbox(double(x) / W, double(y) / H, double(x + w) / W, double(y + h) / H);
        const auto r = to_pixel_rect(box, big_image(W, H), 0.0);
        CHECK(std::abs(r.x - x) <= 1);
        CHECK(std::abs(r.y - y) <= 1);
        CHECK(std::abs((r.x + r.w) - (x + w)) <= 1);
        CHECK(std::abs((r.y + r.h) - (y + h)) <= 1);
    }
}

TEST_CASE("quadruple parsing") {
    const auto q = find_quadruple("The $1.85 is at [0.611, 0.381, 0.875, 0.455].");
    REQUIRE(q.has_value());
    CHECK(q->values == std::array<double, 4>{0.611, 0.381, 0.875, 0.455});
    CHECK(q->begin == 16);
    CHECK(q->end == 44);
    CHECK(find_quadruple("[1, 2] then [0.2,0.3,0.4,0.5]")->values[0] == 0.2);
    CHECK_FALSE(find_quadruple("I cannot find it").has_value());
    CHECK_FALSE(find_quadruple("[a, b, c, d]").has_value());
    CHECK_FALSE(find_quadruple("[0.1, 0.2, 0.3]").has_value());
}

TEST_CASE("consistency rules") {
    CHECK(check_consistency(number("$1.85"), "1.85") == Verdict::match);
    CHECK(check_consistency(noun("beef sauce"), "Beef Sauce") == Verdict::match);
    CHECK(check_consistency(number("204"), "271") == Verdict::mismatch);
    CHECK(check_consistency(number("$1,234.50"), "1234.5") == Verdict::match);
    CHECK(check_consistency(number("1234.5"), "$1,234.50") == Verdict::match);
    CHECK(check_consistency(number("12%"), "12") == Verdict::match);
    CHECK(check_consistency(number("$1.85"), "Price: $1.85 each") == Verdict::match);
    CHECK(check_consistency(noun("beef sauce"), "   ") == Verdict::unreadable);
    CHECK(check_consistency(number("5"), "") == Verdict::unreadable);
    CHECK(check_consistency(noun("beef sauce"), "the beef sauce row") == Verdict::match);
    CHECK(check_consistency(noun("beef sauce"), "sauce beef") == Verdict::mismatch);
    CHECK(check_consistency(noun("beef sauce"), "marinara sauce") == Verdict::mismatch);
    CHECK(check_consistency(noun("chocolate cakes"), "chocolate cake") == Verdict::match);
    CHECK(check_consistency(noun("beef"), "!!!") == Verdict::unreadable);
}

TEST_CASE("grounding prompt is verbatim") {
    CHECK(grounding_prompt(subq_for(number("$1.85"))) ==
          "Where is the $1.85? Please provide the bounding box coordinate of the region.");
}

TEST_CASE("ground_one happy path and error folding") {
    TempDir dir;
    const auto image = write_blank(dir);
    std::string box_reply = "[0.1, 0.2, 0.5, 0.6]";
    std::string read_reply = "Beef Sauce";
    auto oracle = std::make_shared<ScriptOracle>([&](const ChatRequest& r) -> std::string {
        if (r.all_text().find(kGroundingInstruction) != std::string::npos) return box_reply;
        if (r.all_text() == kReadingPrompt) return read_reply;
        throw UnclassifiablePrompt(r.all_text());
    });
    Gateway gw;
    const auto profile = oracle_profile(oracle);
    GroundingContext ctx{gw, profile, "m", 0.0};
    const auto sq = subq_for(noun("beef sauce"));

    auto vb = ground_one(sq, image, ctx, 2);
    CHECK(vb.verdict == Verdict::match);
    CHECK(vb.iteration == 2);
    CHECK(vb.read_content == "Beef Sauce");
    CHECK(vb.failure.empty());
    CHECK(vb.box == validate_nbox(0.1, 0.2, 0.5, 0.6));
    const auto reqs = oracle->requests();
    REQUIRE(reqs.size() == 2);
    const auto crop = decode_image(reqs[1].image()->bytes);
    CHECK(crop.width == 80);
    CHECK(crop.height == 40);
    CHECK(png_text_chunk(reqs[1].image()->bytes, "Source") == "blank#20,20,80,40");

    read_reply = "Marinara";
    CHECK(ground_one(sq, image, ctx, 1).verdict == Verdict::mismatch);

    box_reply = "I cannot find it";
    vb = ground_one(sq, image, ctx, 1);
    CHECK(vb.verdict == Verdict::unreadable);
    CHECK_FALSE(vb.box.has_value());
    CHECK(vb.failure.find("request_box") != std::string::npos);

    box_reply = "[0.2,0.3,0.2,0.5]";
    CHECK(ground_one(sq, image, ctx, 1).verdict == Verdict::unreadable);

    box_reply = "[0.1, 0.1, 0.11, 0.11]";
    vb = ground_one(sq, image, ctx, 1);
    CHECK(vb.verdict == Verdict::unreadable);
    CHECK(vb.box.has_value());
    CHECK(vb.failure.find("read_crop") != std::string::npos);
}

TEST_CASE("request_box surfaces errors directly") {
    TempDir dir;
    const auto image = write_blank(dir);
    std::string reply;
    auto oracle = std::make_shared<ScriptOracle>([&](const ChatRequest&) { return reply; });
    Gateway gw;
    const auto profile = oracle_profile(oracle);
    GroundingContext ctx{gw, profile, "m"};
    reply = "I cannot find it";
    CHECK_THROWS_AS(request_box(subq_for(number("$1.85")), image, ctx), NoBoxInCompletion);
    reply = "[0.2,0.3,0.2,0.5]";
    CHECK_THROWS_AS(request_box(subq_for(number("$1.85")), image, ctx), DegenerateBox);
    reply = "Sure: [0.611, 0.381, 0.875, 0.455]";
    CHECK(request_box(subq_for(number("$1.85")), image, ctx) == validate_nbox(0.611, 0.381, 0.875, 0.455));
}

TEST_CASE("corrupt image bytes") {
    TempDir dir;
    spit(dir / "bad.png", "\x89PNG\r\n\x1a\n garbage");
    const ImageRef bad{"bad", dir / "bad.png", 200, 100};
    auto oracle = std::make_shared<ScriptOracle>([](const ChatRequest&) { return std::string("x"); });
    Gateway gw;
    const auto profile = oracle_profile(oracle);
    GroundingContext ctx{gw, profile, "m"};
    CHECK_THROWS_AS(read_crop({0, 0, 10, 10}, bad, ctx), ImageDecodeError);
    CHECK(verify_box(noun("x"), validate_nbox(0, 0, 0.5, 0.5), bad, ctx) == Verdict::unreadable);
}
