// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gcot {

// ---------------------------------------------------------------------------
// Errors. Every pipeline failure derives from gcot::Error so callers can fold
// them into verdicts or per-sample failure records.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GCOT_DECLARE_ERROR(Name)                   \
    class Name : public Error {                    \
    public:                                        \
        using Error::Error;                        \
    }

GCOT_DECLARE_ERROR(DegenerateBox);
GCOT_DECLARE_ERROR(TransportError);
GCOT_DECLARE_ERROR(ProtocolError);
GCOT_DECLARE_ERROR(MarkerMissing);
GCOT_DECLARE_ERROR(NoBoxInCompletion);
GCOT_DECLARE_ERROR(CropTooSmall);
GCOT_DECLARE_ERROR(ImageDecodeError);
GCOT_DECLARE_ERROR(SpanDrift);
GCOT_DECLARE_ERROR(NotEnoughSamples);
GCOT_DECLARE_ERROR(LengthMismatch);
GCOT_DECLARE_ERROR(MissingImage);
GCOT_DECLARE_ERROR(IoError);
GCOT_DECLARE_ERROR(TrainerFailed);
GCOT_DECLARE_ERROR(UnclassifiablePrompt);
GCOT_DECLARE_ERROR(ConfigError);
GCOT_DECLARE_ERROR(InvalidArgument);

#undef GCOT_DECLARE_ERROR

class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line), detail_(what) {}
    /// 1-based line (or record) number; 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class DatasetTag { chartqa, tabmwp, sroie, dvqa, tatqa, synth };

std::string_view to_string(DatasetTag tag);
DatasetTag dataset_tag_from_string(std::string_view s);

struct ImageRef {
    std::string id;
    std::filesystem::path uri;
    int width_px = 1;
    int height_px = 1;

    bool operator==(const ImageRef&) const = default;
};

struct QASample {
    std::string sample_id;
    ImageRef image;
    std::string question;
    std::string gold_answer;
    DatasetTag dataset = DatasetTag::synth;

    bool operator==(const QASample&) const = default;
};

/// Throws InvalidArgument when the sample breaks a QASample or ImageRef invariant.
void validate(const QASample& sample);

struct CoTRecord {
    std::string sample_id;
    std::string source_model;
    std::string cot_text;
    std::optional<std::string> parsed_answer;
    bool answer_ok = false;
    /// Set when the distillation call itself failed (transport, protocol).
    std::optional<std::string> failure;

    bool operator==(const CoTRecord&) const = default;
};

enum class TargetKind { noun, number };

std::string_view to_string(TargetKind kind);
TargetKind target_kind_from_string(std::string_view s);

/// Half-open byte range [start, end) into a text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - start; }
    bool operator==(const Span&) const = default;
};

struct Target {
    std::string surface;
    TargetKind kind = TargetKind::noun;
    Span span;

    bool operator==(const Target&) const = default;
};

struct SubQuestion {
    Target target;
    std::string prompt;
    int index_t = 1;  // 1-based position among the CoT's targets

    bool operator==(const SubQuestion&) const = default;
};

/// Normalized [x_min, y_min, x_max, y_max] box, origin top-left.
/// Only constructible through validate_nbox, so every instance holds the invariants.
class NBox {
public:
    double x1() const noexcept { return x1_; }
    double y1() const noexcept { return y1_; }
    double x2() const noexcept { return x2_; }
    double y2() const noexcept { return y2_; }
    double width() const noexcept { return x2_ - x1_; }
    double height() const noexcept { return y2_ - y1_; }
    double area() const noexcept { return width() * height(); }

    bool operator==(const NBox&) const = default;

private:
    NBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {}
    friend NBox validate_nbox(double, double, double, double);

    double x1_, y1_, x2_, y2_;
};

inline constexpr double kMinBoxArea = 1e-6;

/// Clamps each coordinate into [0, 1], then checks ordering and minimum area.
/// Throws DegenerateBox on non-finite input or when the clamped box is empty.
NBox validate_nbox(double x1, double y1, double x2, double y2);

/// Rounds every coordinate to 3 decimals and re-validates.
NBox quantize(const NBox& box);

/// "[0.611, 0.381, 0.875, 0.455]"
std::string format_nbox(const NBox& box);

enum class Verdict { match, mismatch, unreadable };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct VerifiedBox {
    SubQuestion sub_question;
    /// Absent when no box could be obtained (no quadruple, degenerate, transport failure).
    std::optional<NBox> box;
    std::string read_content;
    Verdict verdict = Verdict::unreadable;
    int iteration = 1;
    /// Diagnostic for folded errors; empty on the happy path.
    std::string failure;

    bool operator==(const VerifiedBox&) const = default;
};

struct AnnotatedBox {
    Target target;  // span indexes into the GCoT text
    NBox box;

    bool operator==(const AnnotatedBox&) const = default;
};

enum class GCoTOrigin { assembled, self_generated };

std::string_view to_string(GCoTOrigin origin);
GCoTOrigin gcot_origin_from_string(std::string_view s);

struct GCoTRecord {
    std::string sample_id;
    std::string gcot_text;
    std::vector<AnnotatedBox> boxes;
    std::optional<std::string> parsed_answer;
    bool answer_ok = false;
    bool boxes_ok = false;
    GCoTOrigin origin = GCoTOrigin::assembled;

    bool operator==(const GCoTRecord&) const = default;
};

enum class TrainingTask { grounding, gcot };

std::string_view to_string(TrainingTask task);
TrainingTask training_task_from_string(std::string_view s);

struct TrainingManifest {
    TrainingTask task = TrainingTask::grounding;
    std::string records_uri;
    std::string base_model;
    int lora_rank = 16;
    int lora_alpha = 32;
    double learning_rate = 2e-4;
    int epochs = 1;

    bool operator==(const TrainingManifest&) const = default;
};

struct EvalReport {
    int sample_size = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_accuracy;
    double mean = 0.0;
    double std = 0.0;
    bool relaxed = false;

    bool operator==(const EvalReport&) const = default;
};

}  // namespace gcot
