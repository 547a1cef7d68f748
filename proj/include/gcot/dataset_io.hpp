// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/core_model.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gcot {

inline constexpr std::string_view kSchemaVersion = "v1";

enum class Adapter { chartqa, tabmwp, sroie, dvqa, tatqa, synth, generic };

std::string_view to_string(Adapter adapter);
Adapter adapter_from_string(std::string_view s);

/// Targets and templated sub-questions extracted from one CoT.
struct SampleSubQuestions {
    std::string sample_id;
    std::vector<SubQuestion> sub_questions;

    bool operator==(const SampleSubQuestions&) const = default;
};

/// One verified box together with the sample it belongs to.
struct VerifiedEntry {
    std::string sample_id;
    VerifiedBox box;

    bool operator==(const VerifiedEntry&) const = default;
};

/// Instruction-tuning line: one user turn, one assistant turn.
/// Used for both grounding (prompt -> box) and GCoT (question -> GCoT) data.
struct ConversationRecord {
    std::string sample_id;
    std::string image;
    std::string user_text;
    std::string assistant_text;

    bool operator==(const ConversationRecord&) const = default;
};

// JSON codecs. Every encoder stamps "v":"v1"; every decoder checks it and
// throws SchemaError(0, ...) on a missing or mistyped field.
nlohmann::json to_json(const QASample& s);
nlohmann::json to_json(const CoTRecord& r);
nlohmann::json to_json(const SampleSubQuestions& r);
nlohmann::json to_json(const VerifiedEntry& r);
nlohmann::json to_json(const GCoTRecord& r);
nlohmann::json to_json(const ConversationRecord& r);
nlohmann::json to_json(const TrainingManifest& m);
nlohmann::json to_json(const EvalReport& r);

void from_json_record(const nlohmann::json& j, QASample& out);
void from_json_record(const nlohmann::json& j, CoTRecord& out);
void from_json_record(const nlohmann::json& j, SampleSubQuestions& out);
void from_json_record(const nlohmann::json& j, VerifiedEntry& out);
void from_json_record(const nlohmann::json& j, GCoTRecord& out);
void from_json_record(const nlohmann::json& j, ConversationRecord& out);
void from_json_record(const nlohmann::json& j, TrainingManifest& out);
void from_json_record(const nlohmann::json& j, EvalReport& out);

nlohmann::json nbox_to_json(const NBox& box);
NBox nbox_from_json(const nlohmann::json& j);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

std::size_t write_jsonl(std::span<const nlohmann::json> lines, const std::filesystem::path& path);

/// One JSON object per line, newline-terminated; atomic. Returns the count.
template <class T>
std::size_t write_records(std::span<const T> records, const std::filesystem::path& path) {
    std::vector<nlohmann::json> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(to_json(r));
    return write_jsonl(lines, path);
}

template <class T>
std::size_t write_records(const std::vector<T>& records, const std::filesystem::path& path) {
    return write_records(std::span<const T>(records), path);
}

struct JsonLine {
    std::size_t line = 0;  // 1-based
    nlohmann::json value;
};

/// Every non-blank line parsed; SchemaError on malformed JSON. IoError if unreadable.
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);

/// Decodes every line; SchemaError carries the 1-based line number.
template <class T>
std::vector<T> read_records(const std::filesystem::path& path) {
    std::vector<T> out;
    for (const auto& [line, j] : read_jsonl(path)) {
        T record;
        try {
            from_json_record(j, record);
        } catch (const SchemaError& e) {
            throw SchemaError(line, e.detail());
        } catch (const Error& e) {
            throw SchemaError(line, e.what());
        }
        out.push_back(std::move(record));
    }
    return out;
}

/// Normalizes a source dataset into QASamples. `path` is the annotation file
/// (chartqa, tabmwp, dvqa, tatqa, synth manifest, generic JSONL) or the dataset
/// directory (sroie). Image paths resolve against the annotation file's directory.
/// Throws SchemaError (with line or record number) and MissingImage.
std::vector<QASample> read_samples(const std::filesystem::path& path, Adapter adapter);

/// GCoT instruction-tuning line: the question in, the GCoT text out.
ConversationRecord gcot_training_record(const QASample& sample, const GCoTRecord& record);

}  // namespace gcot
