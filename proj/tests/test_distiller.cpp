// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/distiller.hpp"
#include "gcot/text_util.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <atomic>

using namespace gcot;
using namespace gcot::testing;

namespace {

std::string teacher_text(const std::string& name) { return slurp(fixture("distillation/" + name + ".txt")); }

std::string fan_question() { return std::string(text::trim(slurp(fixture("distillation/question.txt")))); }

QASample fan_sample(std::string id = "fan") {
    return {std::move(id), {"tiny", fixture("wire/tiny.png"), 16, 12}, fan_question(), "475", DatasetTag::tabmwp};
}

}  // namespace

TEST_CASE("three teacher transcripts yield 475") {
    for (const char* name : {"llama", "gemini", "claude"}) {
        CAPTURE(name);
        const auto parsed = parse_answer_marker(teacher_text(name));
        CHECK(parsed.preferred() == "475");
        CHECK(answer_matches(parsed, "475"));
    }
}

TEST_CASE("transcript without the marker raises MarkerMissing") {
    CHECK_THROWS_AS(parse_answer_marker(teacher_text("qwen")), MarkerMissing);
    CHECK_FALSE(try_parse_answer_marker(teacher_text("qwen")).has_value());
}

TEST_CASE("marker parsing details") {
    CHECK(parse_answer_marker("*Answer*: 12.").raw == "12");
    CHECK(parse_answer_marker("a *Answer*: 1 then *Answer*: 2").preferred() == "2");
    CHECK(parse_answer_marker("*Answer*: **$3.50**").preferred() == "$3.50");
    const auto words = parse_answer_marker("*Answer*: Yes, it is.");
    CHECK(words.raw == "Yes, it is.");
    CHECK_FALSE(words.numeric.has_value());
    // Case-sensitive marker.
    CHECK_THROWS_AS(parse_answer_marker("*answer*: 3"), MarkerMissing);
    CHECK(parse_answer_marker("*Answer*:").raw.empty());
}

TEST_CASE("answer matching") {
    CHECK(answer_matches(parse_answer_marker("*Answer*: $1,234.50"), "1234.5"));
    CHECK_FALSE(answer_matches(parse_answer_marker("*Answer*: 478"), "475"));
    CHECK(answer_matches(parse_answer_marker("*Answer*: 490"), "475", true));
    CHECK_FALSE(answer_matches(parse_answer_marker("*Answer*: 500"), "475", true));
}

TEST_CASE("distill prompt is verbatim") {
    CHECK(build_distill_prompt(fan_sample()) ==
          "Based on the following question: " + fan_question() +
              " Your task is to give a explanation for the question. Give step by step reasoning to get the "
              "answer, and when you're ready to answer, please use the format '*Answer*:'");
}

TEST_CASE("batch distillation keeps order and records per-sample failures") {
    std::vector<QASample> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(fan_sample("s" + std::to_string(i)));
    samples[2].question = "FAIL " + samples[2].question;
    samples[4].question = "NOMARK " + samples[4].question;
    auto oracle = std::make_shared<ScriptOracle>([](const ChatRequest& r) -> std::string {
        const auto text = r.all_text();
        if (text.find("FAIL") != std::string::npos) throw TransportError("connection reset");
        if (text.find("NOMARK") != std::string::npos) return slurp(fixture("distillation/qwen.txt"));
        return slurp(fixture("distillation/llama.txt"));
    });
    Gateway gw;
    const auto result = distill(samples, gw, oracle_profile(oracle, 3), {"teacher"});
    REQUIRE(result.records.size() == 5);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].sample_id == "s2");
    CHECK(result.failures[0].reason.find("connection reset") != std::string::npos);
    const std::vector<std::string> ids{"s0", "s1", "s3", "s4", "s5"};
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(result.records[i].sample_id == ids[i]);
    // The wrong intermediate sum does not matter; only the final answer is checked.
    CHECK(result.records[0].answer_ok);
    CHECK(result.records[0].parsed_answer == "475");
    CHECK(result.records[0].source_model == "teacher");
    CHECK_FALSE(result.records[3].answer_ok);
    CHECK_FALSE(result.records[3].parsed_answer.has_value());
    CHECK(gw.counters("test-oracle").peak_in_flight <= 3);
}

TEST_CASE("requests carry the image unless disabled") {
    auto oracle = std::make_shared<ScriptOracle>([](const ChatRequest&) { return std::string("*Answer*: 475"); });
    Gateway gw;
    const std::vector<QASample> one{fan_sample()};
    DistillOptions opts{"teacher"};
    distill(one, gw, oracle_profile(oracle), opts);
    opts.attach_image = false;
    distill(one, gw, oracle_profile(oracle), opts);
    const auto reqs = oracle->requests();
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[0].image() != nullptr);
    CHECK(reqs[0].image()->media_type == "image/png");
    CHECK(reqs[1].image() == nullptr);
    CHECK(reqs[0].temperature == 0.0);
}

TEST_CASE("empty batch is rejected") {
    Gateway gw;
    auto oracle = std::make_shared<ScriptOracle>([](const ChatRequest&) { return std::string(); });
    CHECK_THROWS_AS(distill(std::vector<QASample>{}, gw, oracle_profile(oracle), {"t"}), InvalidArgument);
}
