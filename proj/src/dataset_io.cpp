// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/dataset_io.hpp"

#include "gcot/eval_harness.hpp"
#include "gcot/image.hpp"
#include "gcot/synth_world.hpp"

#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace gcot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<Adapter, std::string_view>, 7> kAdapters{{
    {Adapter::chartqa, "chartqa"},
    {Adapter::tabmwp, "tabmwp"},
    {Adapter::sroie, "sroie"},
    {Adapter::dvqa, "dvqa"},
    {Adapter::tatqa, "tatqa"},
    {Adapter::synth, "synth"},
    {Adapter::generic, "generic"},
}};

template <class T>
T field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw SchemaError(0, std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw SchemaError(0, std::string("field '") + key + "' has the wrong type");
    }
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw SchemaError(0, std::string("field '") + key + "' has the wrong type");
    }
}

void check_object(const json& j) {
    if (!j.is_object()) throw SchemaError(0, "record is not a JSON object");
    const auto v = field<std::string>(j, "v");
    if (v != kSchemaVersion) throw SchemaError(0, "unsupported schema version '" + v + "'");
}

template <class E, class Fn>
E enum_field(const json& j, const char* key, Fn parse) {
    const auto s = field<std::string>(j, key);
    try {
        return parse(s);
    } catch (const Error& e) {
        throw SchemaError(0, e.what());
    }
}

json span_to_json(const Span& s) { return json::array({s.start, s.end}); }

Span span_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
        throw SchemaError(0, "span must be [start, end]");
    }
    Span s{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
    if (s.end < s.start) throw SchemaError(0, "span end precedes start");
    return s;
}

json target_to_json(const Target& t) {
    return {{"surface", t.surface}, {"kind", to_string(t.kind)}, {"span", span_to_json(t.span)}};
}

Target target_from_json(const json& j) {
    Target t;
    t.surface = field<std::string>(j, "surface");
    t.kind = enum_field<TargetKind>(j, "kind", target_kind_from_string);
    t.span = span_from_json(j.at("span"));
    return t;
}

json subq_to_json(const SubQuestion& q) {
    return {{"target", target_to_json(q.target)}, {"prompt", q.prompt}, {"index_t", q.index_t}};
}

SubQuestion subq_from_json(const json& j) {
    if (!j.contains("target")) throw SchemaError(0, "missing field 'target'");
    return SubQuestion{target_from_json(j.at("target")), field<std::string>(j, "prompt"), field<int>(j, "index_t")};
}

/// Resolves an image path from an annotation file and fills the pixel size.
ImageRef resolve_image(const fs::path& base, const std::string& rel, std::string id, std::size_t line) {
    const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
        throw MissingImage("line " + std::to_string(line) + ": image not found: " + p.string());
    }
    ImageRef ref;
    ref.id = std::move(id);
    ref.uri = fs::absolute(p).lexically_normal();
    try {
        const auto size = probe_image_size(read_file_bytes(ref.uri));
        ref.width_px = size.width;
        ref.height_px = size.height;
    } catch (const ImageDecodeError& e) {
        throw SchemaError(line, e.what());
    }
    return ref;
}

json parse_json_file(const fs::path& path) {
    const auto text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw SchemaError(line, std::string("invalid JSON: ") + e.what());
    }
}

/// Text of an answer that may be a string, number or list of those.
std::string answer_text(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer() || j.is_number_unsigned()) return j.dump();
    if (j.is_number_float()) {
        std::ostringstream out;
        out << j.get<double>();
        return out.str();
    }
    if (j.is_array()) {
        std::string out;
        for (const auto& e : j) {
            if (!out.empty()) out += ", ";
            out += answer_text(e);
        }
        return out;
    }
    throw SchemaError(0, "answer must be a string, number or list");
}

std::string stem(const std::string& file) { return fs::path(file).stem().string(); }

QASample make_sample(std::string id, ImageRef image, std::string question, std::string answer, DatasetTag tag,
                     std::size_t line) {
    QASample s{std::move(id), std::move(image), std::move(question), std::move(answer), tag};
    try {
        validate(s);
    } catch (const InvalidArgument& e) {
        throw SchemaError(line, e.what());
    }
    return s;
}

template <class Fn>
void for_each_record(const json& arr, Fn&& fn) {
    if (!arr.is_array()) throw SchemaError(1, "expected a JSON array of records");
    std::size_t n = 0;
    for (const auto& rec : arr) {
        ++n;
        try {
            if (!rec.is_object()) throw SchemaError(0, "record is not an object");
            fn(rec, n);
        } catch (const SchemaError& e) {
            if (e.line() != 0) throw;
            throw SchemaError(n, e.detail());
        }
    }
}

std::vector<QASample> read_chartqa(const fs::path& path) {
    const auto base = path.parent_path();
    std::vector<QASample> out;
    for_each_record(parse_json_file(path), [&](const json& r, std::size_t n) {
        const auto img = field<std::string>(r, "imgname");
        out.push_back(make_sample("chartqa-" + std::to_string(n - 1), resolve_image(base, "png/" + img, stem(img), n),
                                  field<std::string>(r, "query"), answer_text(r.at("label")), DatasetTag::chartqa,
                                  n));
    });
    return out;
}

std::vector<QASample> read_tabmwp(const fs::path& path) {
    const auto base = path.parent_path();
    const auto doc = parse_json_file(path);
    if (!doc.is_object()) throw SchemaError(1, "expected an object keyed by problem id");
    std::vector<QASample> out;
    std::size_t n = 0;
    for (const auto& [pid, r] : doc.items()) {
        ++n;
        try {
            if (!r.is_object()) throw SchemaError(0, "record is not an object");
            if (!r.contains("answer")) throw SchemaError(0, "missing field 'answer'");
            out.push_back(make_sample("tabmwp-" + pid, resolve_image(base, "tables/" + pid + ".png", pid, n),
                                      field<std::string>(r, "question"), answer_text(r.at("answer")),
                                      DatasetTag::tabmwp, n));
        } catch (const SchemaError& e) {
            if (e.line() != 0) throw;
            throw SchemaError(n, e.detail());
        }
    }
    return out;
}

std::vector<QASample> read_sroie(const fs::path& dir) {
    static constexpr std::array<std::pair<const char*, const char*>, 4> kFields{{
        {"company", "What is the name of the company that issued this receipt?"},
        {"date", "What is the date on this receipt?"},
        {"address", "What is the address of the company that issued this receipt?"},
        {"total", "What is the total amount on this receipt?"},
    }};
    const auto key_dir = dir / "key";
    std::error_code ec;
    if (!fs::is_directory(key_dir, ec)) throw SchemaError(0, "sroie dataset needs a key/ directory: " + dir.string());
    std::vector<fs::path> keys;
    for (const auto& e : fs::directory_iterator(key_dir)) {
        if (e.path().extension() == ".txt") keys.push_back(e.path());
    }
    std::sort(keys.begin(), keys.end());
    std::vector<QASample> out;
    std::size_t n = 0;
    for (const auto& key : keys) {
        ++n;
        const auto id = key.stem().string();
        json doc;
        try {
            doc = parse_json_file(key);
        } catch (const SchemaError& e) {
            throw SchemaError(e.line(), key.filename().string() + ": " + e.detail());
        }
        const auto image = resolve_image(dir, "img/" + id + ".jpg", id, n);
        for (const auto& [name, question] : kFields) {
            try {
                out.push_back(make_sample("sroie-" + id + "-" + name, image, question, field<std::string>(doc, name),
                                          DatasetTag::sroie, n));
            } catch (const SchemaError& e) {
                throw SchemaError(n, key.filename().string() + ": " + e.detail());
            }
        }
    }
    return out;
}

std::vector<QASample> read_dvqa(const fs::path& path) {
    const auto base = path.parent_path();
    std::vector<QASample> out;
    for_each_record(parse_json_file(path), [&](const json& r, std::size_t n) {
        const auto img = field<std::string>(r, "image");
        const auto qid = r.contains("question_id") ? answer_text(r.at("question_id")) : std::to_string(n - 1);
        out.push_back(make_sample("dvqa-" + qid, resolve_image(base, "images/" + img, stem(img), n),
                                  field<std::string>(r, "question"), answer_text(r.at("answer")), DatasetTag::dvqa,
                                  n));
    });
    return out;
}

std::vector<QASample> read_tatqa(const fs::path& path) {
    const auto base = path.parent_path();
    std::vector<QASample> out;
    for_each_record(parse_json_file(path), [&](const json& r, std::size_t n) {
        if (!r.contains("table") || !r.at("table").is_object()) throw SchemaError(0, "missing field 'table'");
        const auto uid = field<std::string>(r.at("table"), "uid");
        const auto image = resolve_image(base, "images/" + uid + ".png", uid, n);
        if (!r.contains("questions") || !r.at("questions").is_array()) {
            throw SchemaError(0, "missing field 'questions'");
        }
        for (const auto& q : r.at("questions")) {
            if (!q.contains("answer")) throw SchemaError(0, "missing field 'answer'");
            out.push_back(make_sample("tatqa-" + field<std::string>(q, "uid"), image, field<std::string>(q, "question"),
                                      answer_text(q.at("answer")), DatasetTag::tatqa, n));
        }
    });
    return out;
}

std::vector<QASample> read_generic(const fs::path& path) {
    const auto base = path.parent_path();
    std::vector<QASample> out;
    for (const auto& [line, j] : read_jsonl(path)) {
        try {
            if (!j.is_object()) throw SchemaError(0, "record is not a JSON object");
            if (const auto v = optional_field<std::string>(j, "v"); v && *v != kSchemaVersion) {
                throw SchemaError(0, "unsupported schema version '" + *v + "'");
            }
            const auto rel = field<std::string>(j, "image");
            auto image = resolve_image(base, rel, optional_field<std::string>(j, "image_id").value_or(stem(rel)), line);
            const auto tag = optional_field<std::string>(j, "dataset");
            out.push_back(make_sample(field<std::string>(j, "sample_id"), std::move(image),
                                      field<std::string>(j, "question"), field<std::string>(j, "answer"),
                                      tag ? enum_field<DatasetTag>(j, "dataset", dataset_tag_from_string)
                                          : DatasetTag::synth,
                                      line));
        } catch (const SchemaError& e) {
            if (e.line() != 0) throw;
            throw SchemaError(line, e.detail());
        }
    }
    return out;
}

std::vector<QASample> read_synth(const fs::path& path) {
    const auto world = load_world(path);
    std::size_t n = 0;
    for (const auto& s : world.qa) {
        ++n;
        std::error_code ec;
        if (!fs::is_regular_file(s.image.uri, ec)) {
            throw MissingImage("record " + std::to_string(n) + ": image not found: " + s.image.uri.string());
        }
    }
    return world.qa;
}

}  // namespace

std::string_view to_string(Adapter adapter) {
    for (const auto& [a, name] : kAdapters) {
        if (a == adapter) return name;
    }
    return "?";
}

Adapter adapter_from_string(std::string_view s) {
    for (const auto& [a, name] : kAdapters) {
        if (name == s) return a;
    }
    throw InvalidArgument("unknown adapter '" + std::string(s) + "'");
}

json nbox_to_json(const NBox& box) { return json::array({box.x1(), box.y1(), box.x2(), box.y2()}); }

NBox nbox_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw SchemaError(0, "box must be [x1, y1, x2, y2]");
    for (const auto& v : j) {
        if (!v.is_number()) throw SchemaError(0, "box coordinates must be numbers");
    }
    try {
        return validate_nbox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
    } catch (const DegenerateBox& e) {
        throw SchemaError(0, e.what());
    }
}

// --- Encoders ---------------------------------------------------------------

json to_json(const QASample& s) {
    return {
        {"v", kSchemaVersion},
        {"sample_id", s.sample_id},
        {"image", s.image.uri.generic_string()},
        {"image_id", s.image.id},
        {"width_px", s.image.width_px},
        {"height_px", s.image.height_px},
        {"question", s.question},
        {"answer", s.gold_answer},
        {"dataset", to_string(s.dataset)},
    };
}

json to_json(const CoTRecord& r) {
    return {
        {"v", kSchemaVersion},
        {"sample_id", r.sample_id},
        {"source_model", r.source_model},
        {"cot_text", r.cot_text},
        {"parsed_answer", r.parsed_answer ? json(*r.parsed_answer) : json(nullptr)},
        {"answer_ok", r.answer_ok},
        {"failure", r.failure ? json(*r.failure) : json(nullptr)},
    };
}

json to_json(const SampleSubQuestions& r) {
    json subqs = json::array();
    for (const auto& q : r.sub_questions) subqs.push_back(subq_to_json(q));
    return {{"v", kSchemaVersion}, {"sample_id", r.sample_id}, {"sub_questions", std::move(subqs)}};
}

json to_json(const VerifiedEntry& r) {
    const auto& b = r.box;
    return {
        {"v", kSchemaVersion},
        {"sample_id", r.sample_id},
        {"sub_question", subq_to_json(b.sub_question)},
        {"box", b.box ? nbox_to_json(*b.box) : json(nullptr)},
        {"read_content", b.read_content},
        {"verdict", to_string(b.verdict)},
        {"iteration", b.iteration},
        {"failure", b.failure},
    };
}

json to_json(const GCoTRecord& r) {
    json boxes = json::array();
    for (const auto& b : r.boxes) boxes.push_back({{"target", target_to_json(b.target)}, {"box", nbox_to_json(b.box)}});
    return {
        {"v", kSchemaVersion},
        {"sample_id", r.sample_id},
        {"gcot_text", r.gcot_text},
        {"boxes", std::move(boxes)},
        {"parsed_answer", r.parsed_answer ? json(*r.parsed_answer) : json(nullptr)},
        {"answer_ok", r.answer_ok},
        {"boxes_ok", r.boxes_ok},
        {"origin", to_string(r.origin)},
    };
}

json to_json(const ConversationRecord& r) {
    return {
        {"v", kSchemaVersion},
        {"sample_id", r.sample_id},
        {"image", r.image},
        {"conversation",
         json::array({{{"role", "user"}, {"text", r.user_text}}, {{"role", "assistant"}, {"text", r.assistant_text}}})},
    };
}

json to_json(const TrainingManifest& m) {
    return {
        {"v", kSchemaVersion},
        {"task", to_string(m.task)},
        {"records_uri", m.records_uri},
        {"base_model", m.base_model},
        {"lora_rank", m.lora_rank},
        {"lora_alpha", m.lora_alpha},
        {"learning_rate", m.learning_rate},
        {"epochs", m.epochs},
    };
}

json to_json(const EvalReport& r) { return report_to_json(r); }

// --- Decoders ---------------------------------------------------------------

void from_json_record(const json& j, QASample& out) {
    check_object(j);
    out.sample_id = field<std::string>(j, "sample_id");
    out.image.uri = field<std::string>(j, "image");
    out.image.id = field<std::string>(j, "image_id");
    out.image.width_px = field<int>(j, "width_px");
    out.image.height_px = field<int>(j, "height_px");
    out.question = field<std::string>(j, "question");
    out.gold_answer = field<std::string>(j, "answer");
    out.dataset = enum_field<DatasetTag>(j, "dataset", dataset_tag_from_string);
    try {
        validate(out);
    } catch (const InvalidArgument& e) {
        throw SchemaError(0, e.what());
    }
}

void from_json_record(const json& j, CoTRecord& out) {
    check_object(j);
    out.sample_id = field<std::string>(j, "sample_id");
    out.source_model = field<std::string>(j, "source_model");
    out.cot_text = field<std::string>(j, "cot_text");
    out.parsed_answer = optional_field<std::string>(j, "parsed_answer");
    out.answer_ok = field<bool>(j, "answer_ok");
    out.failure = optional_field<std::string>(j, "failure");
}

void from_json_record(const json& j, SampleSubQuestions& out) {
    check_object(j);
    out.sample_id = field<std::string>(j, "sample_id");
    out.sub_questions.clear();
    const auto it = j.find("sub_questions");
    if (it == j.end() || !it->is_array()) throw SchemaError(0, "missing field 'sub_questions'");
    for (const auto& q : *it) out.sub_questions.push_back(subq_from_json(q));
}

void from_json_record(const json& j, VerifiedEntry& out) {
    check_object(j);
    out.sample_id = field<std::string>(j, "sample_id");
    if (!j.contains("sub_question")) throw SchemaError(0, "missing field 'sub_question'");
    out.box.sub_question = subq_from_json(j.at("sub_question"));
    const auto it = j.find("box");
    out.box.box = (it == j.end() || it->is_null()) ? std::nullopt : std::optional<NBox>(nbox_from_json(*it));
    out.box.read_content = field<std::string>(j, "read_content");
    out.box.verdict = enum_field<Verdict>(j, "verdict", verdict_from_string);
    out.box.iteration = field<int>(j, "iteration");
    out.box.failure = optional_field<std::string>(j, "failure").value_or("");
}

void from_json_record(const json& j, GCoTRecord& out) {
    check_object(j);
    out.sample_id = field<std::string>(j, "sample_id");
    out.gcot_text = field<std::string>(j, "gcot_text");
    out.boxes.clear();
    const auto it = j.find("boxes");
    if (it == j.end() || !it->is_array()) throw SchemaError(0, "missing field 'boxes'");
    for (const auto& b : *it) {
        if (!b.is_object() || !b.contains("target") || !b.contains("box")) {
            throw SchemaError(0, "box entries need 'target' and 'box'");
        }
        out.boxes.push_back({target_from_json(b.at("target")), nbox_from_json(b.at("box"))});
    }
    out.parsed_answer = optional_field<std::string>(j, "parsed_answer");
    out.answer_ok = field<bool>(j, "answer_ok");
    out.boxes_ok = field<bool>(j, "boxes_ok");
    out.origin = enum_field<GCoTOrigin>(j, "origin", gcot_origin_from_string);
}

void from_json_record(const json& j, ConversationRecord& out) {
    check_object(j);
    out.sample_id = field<std::string>(j, "sample_id");
    out.image = field<std::string>(j, "image");
    const auto it = j.find("conversation");
    if (it == j.end() || !it->is_array() || it->size() != 2) {
        throw SchemaError(0, "conversation must hold a user and an assistant turn");
    }
    if (field<std::string>((*it)[0], "role") != "user" || field<std::string>((*it)[1], "role") != "assistant") {
        throw SchemaError(0, "conversation roles must be user then assistant");
    }
    out.user_text = field<std::string>((*it)[0], "text");
    out.assistant_text = field<std::string>((*it)[1], "text");
}

void from_json_record(const json& j, TrainingManifest& out) {
    check_object(j);
    out.task = enum_field<TrainingTask>(j, "task", training_task_from_string);
    out.records_uri = field<std::string>(j, "records_uri");
    out.base_model = field<std::string>(j, "base_model");
    out.lora_rank = field<int>(j, "lora_rank");
    out.lora_alpha = field<int>(j, "lora_alpha");
    out.learning_rate = field<double>(j, "learning_rate");
    out.epochs = field<int>(j, "epochs");
}

void from_json_record(const json& j, EvalReport& out) {
    check_object(j);
    try {
        out = report_from_json(j);
    } catch (const json::exception& e) {
        throw SchemaError(0, e.what());
    }
}

// --- Files ------------------------------------------------------------------

void write_file_atomic(const fs::path& path, std::string_view content) {
    static std::atomic<unsigned> counter{0};
    const auto tmp = fs::path(path).concat(".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t write_jsonl(std::span<const json> lines, const fs::path& path) {
    std::string out;
    for (const auto& j : lines) {
        out += j.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
    return lines.size();
}

std::vector<JsonLine> read_jsonl(const fs::path& path) {
    const auto text = read_text_file(path);
    std::vector<JsonLine> out;
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line;
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string_view raw(text.data() + pos, nl - pos);
        pos = nl + 1;
        if (raw.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        auto j = json::parse(raw, nullptr, false);
        if (j.is_discarded()) throw SchemaError(line, "invalid JSON");
        out.push_back({line, std::move(j)});
    }
    return out;
}

std::vector<QASample> read_samples(const fs::path& path, Adapter adapter) {
    std::error_code ec;
    if (!fs::exists(path, ec)) throw IoError("no such file or directory: " + path.string());
    switch (adapter) {
        case Adapter::chartqa: return read_chartqa(path);
        case Adapter::tabmwp: return read_tabmwp(path);
        case Adapter::sroie: return read_sroie(path);
        case Adapter::dvqa: return read_dvqa(path);
        case Adapter::tatqa: return read_tatqa(path);
        case Adapter::synth: return read_synth(path);
        case Adapter::generic: return read_generic(path);
    }
    throw InvalidArgument("unknown adapter");
}

ConversationRecord gcot_training_record(const QASample& sample, const GCoTRecord& record) {
    if (sample.sample_id != record.sample_id) {
        throw InvalidArgument("record '" + record.sample_id + "' paired with sample '" + sample.sample_id + "'");
    }
    return {sample.sample_id, sample.image.uri.generic_string(), sample.question, record.gcot_text};
}

}  // namespace gcot
