// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/core_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <utility>

namespace gcot {

namespace {

template <typename Enum, std::size_t N>
Enum enum_from_string(std::string_view s, const std::array<std::pair<Enum, std::string_view>, N>& table,
                      std::string_view what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    throw InvalidArgument("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename Enum, std::size_t N>
std::string_view enum_to_string(Enum e, const std::array<std::pair<Enum, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == e) return name;
    }
    return "?";
}

constexpr std::array<std::pair<DatasetTag, std::string_view>, 6> kDatasetTags{{
    {DatasetTag::chartqa, "chartqa"},
    {DatasetTag::tabmwp, "tabmwp"},
    {DatasetTag::sroie, "sroie"},
    {DatasetTag::dvqa, "dvqa"},
    {DatasetTag::tatqa, "tatqa"},
    {DatasetTag::synth, "synth"},
}};

constexpr std::array<std::pair<TargetKind, std::string_view>, 2> kTargetKinds{{
    {TargetKind::noun, "noun"},
    {TargetKind::number, "number"},
}};

constexpr std::array<std::pair<Verdict, std::string_view>, 3> kVerdicts{{
    {Verdict::match, "match"},
    {Verdict::mismatch, "mismatch"},
    {Verdict::unreadable, "unreadable"},
}};

constexpr std::array<std::pair<GCoTOrigin, std::string_view>, 2> kOrigins{{
    {GCoTOrigin::assembled, "assembled"},
    {GCoTOrigin::self_generated, "self_generated"},
}};

constexpr std::array<std::pair<TrainingTask, std::string_view>, 2> kTasks{{
    {TrainingTask::grounding, "grounding"},
    {TrainingTask::gcot, "gcot"},
}};

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

std::string_view to_string(DatasetTag tag) { return enum_to_string(tag, kDatasetTags); }
DatasetTag dataset_tag_from_string(std::string_view s) { return enum_from_string(s, kDatasetTags, "dataset"); }
std::string_view to_string(TargetKind kind) { return enum_to_string(kind, kTargetKinds); }
TargetKind target_kind_from_string(std::string_view s) { return enum_from_string(s, kTargetKinds, "target kind"); }
std::string_view to_string(Verdict v) { return enum_to_string(v, kVerdicts); }
Verdict verdict_from_string(std::string_view s) { return enum_from_string(s, kVerdicts, "verdict"); }
std::string_view to_string(GCoTOrigin origin) { return enum_to_string(origin, kOrigins); }
GCoTOrigin gcot_origin_from_string(std::string_view s) { return enum_from_string(s, kOrigins, "origin"); }
std::string_view to_string(TrainingTask task) { return enum_to_string(task, kTasks); }
TrainingTask training_task_from_string(std::string_view s) { return enum_from_string(s, kTasks, "training task"); }

void validate(const QASample& sample) {
    if (sample.question.empty()) throw InvalidArgument("sample '" + sample.sample_id + "': empty question");
    if (sample.gold_answer.empty()) throw InvalidArgument("sample '" + sample.sample_id + "': empty gold answer");
    if (sample.image.width_px < 1 || sample.image.height_px < 1) {
        throw InvalidArgument("sample '" + sample.sample_id + "': image dimensions must be positive");
    }
}

NBox validate_nbox(double x1, double y1, double x2, double y2) {
    for (double v : {x1, y1, x2, y2}) {
        if (!std::isfinite(v)) throw DegenerateBox("non-finite box coordinate");
    }
    x1 = std::clamp(x1, 0.0, 1.0);
    y1 = std::clamp(y1, 0.0, 1.0);
    x2 = std::clamp(x2, 0.0, 1.0);
    y2 = std::clamp(y2, 0.0, 1.0);
    if (x1 >= x2 || y1 >= y2) throw DegenerateBox("box has zero or negative extent");
    if ((x2 - x1) * (y2 - y1) < kMinBoxArea) throw DegenerateBox("box area below 1e-6");
    return NBox(x1, y1, x2, y2);
}

NBox quantize(const NBox& box) {
    return validate_nbox(round3(box.x1()), round3(box.y1()), round3(box.x2()), round3(box.y2()));
}

std::string format_nbox(const NBox& box) {
    char buf[64];
    // +0.0 folds a negative zero produced by rounding.
    std::snprintf(buf, sizeof buf, "[%.3f, %.3f, %.3f, %.3f]", box.x1() + 0.0, box.y1() + 0.0, box.x2() + 0.0,
                  box.y2() + 0.0);
    return buf;
}

}  // namespace gcot
