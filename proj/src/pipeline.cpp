// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/pipeline.hpp"

#include "gcot/assembler.hpp"
#include "gcot/dataset_io.hpp"
#include "gcot/distiller.hpp"
#include "gcot/eval_harness.hpp"
#include "gcot/synth_world.hpp"
#include "gcot/target_extractor.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <map>
#include <sys/file.h>
#include <unistd.h>

#ifndef GCOT_VERSION
#define GCOT_VERSION "0.0.0"
#endif

namespace gcot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::map<std::string, QASample> samples_by_id(const std::vector<QASample>& samples) {
    std::map<std::string, QASample> out;
    for (const auto& s : samples) {
        if (!out.emplace(s.sample_id, s).second) throw SchemaError(0, "duplicate sample id '" + s.sample_id + "'");
    }
    return out;
}

const QASample& lookup(const std::map<std::string, QASample>& by_id, const std::string& id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw SchemaError(0, "record refers to unknown sample '" + id + "'");
    return it->second;
}

void write_metadata(const fs::path& path, const PipelineConfig& config, std::string_view stage,
                    const json& summary) {
    json meta = json::object();
    std::error_code ec;
    if (fs::exists(path, ec)) {
        meta = json::parse(read_text_file(path), nullptr, false);
        if (meta.is_discarded() || !meta.is_object()) meta = json::object();
    }
    meta["v"] = kSchemaVersion;
    meta["tool"] = "gcot-forge";
    meta["version"] = tool_version();
    meta["config_hash"] = config_hash(config);
    meta["config"] = config_to_json(config);
    meta["seeds"] = {
        {"synth", config.synth.seed},
        {"oracle", config.oracle.policy.seed},
        {"augment_base_seed", config.augment.base_seed},
        {"eval", config.eval.seeds},
    };
    meta["stages"][std::string(stage)] = summary;
    write_file_atomic(path, meta.dump(2) + "\n");
}

}  // namespace

std::string_view tool_version() { return GCOT_VERSION; }

RunLock::RunLock(const fs::path& run_dir) {
    fs::create_directories(run_dir);
    const auto path = run_dir / ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file " + path.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoError("run directory " + run_dir.string() + " is locked by another gcot-forge process");
    }
}

RunLock::~RunLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), layout_{config_.run_dir} { validate(config_); }

const BackendProfile& Pipeline::profile() {
    if (profile_) return *profile_;
    const auto& b = config_.backend;
    if (b.kind == "oracle") {
        auto world_path = config_.oracle.world;
        if (world_path.empty()) {
            if (config_.data.adapter != Adapter::synth || config_.data.path.empty()) {
                throw ConfigError("[oracle] world is required unless [data] is a synth manifest");
            }
            world_path = config_.data.path;
        }
        auto world = std::make_shared<const SynthWorld>(load_world(world_path));
        profile_ = oracle_configure(std::move(world), config_.oracle.policy, b.max_in_flight);
        profile_->name = b.name;
    } else {
        BackendProfile p;
        p.name = b.name;
        p.endpoint_url = b.endpoint;
        p.auth_env_var = b.api_key_env;
        p.timeout_s = b.timeout_s;
        p.max_retries = b.max_retries;
        p.max_in_flight = b.max_in_flight;
        validate(p);
        profile_ = std::move(p);
    }
    return *profile_;
}

void Pipeline::record_stage(std::string_view stage, const json& summary) {
    fs::create_directories(layout_.dir);
    write_metadata(layout_.metadata(), config_, stage, summary);
}

void Pipeline::synth() {
    const auto& s = config_.synth;
    fs::create_directories(s.out);
    const auto world = generate_world(s.seed, s.images, s.items, s.out);
    write_metadata(s.out / "run_metadata.json", config_, "synth",
                   {{"images", world.images.size()}, {"qa", world.qa.size()}, {"manifest", "manifest.json"}});
}

void Pipeline::distill() {
    if (config_.data.path.empty()) throw ConfigError("[data] path is required");
    const auto samples = read_samples(config_.data.path, config_.data.adapter);
    if (samples.empty()) throw SchemaError(0, "dataset " + config_.data.path.string() + " holds no samples");
    samples_by_id(samples);
    fs::create_directories(layout_.dir);
    write_records(samples, layout_.samples());

    DistillOptions options;
    options.model = config_.backend.teacher_model.empty() ? config_.backend.model : config_.backend.teacher_model;
    options.max_tokens = config_.distill.max_tokens;
    options.relaxed = config_.distill.relaxed;
    options.attach_image = config_.distill.attach_image;
    const auto result = gcot::distill(samples, gateway_, profile(), options);

    write_records(result.records, layout_.cot());
    std::vector<json> failures;
    for (const auto& f : result.failures) {
        failures.push_back({{"v", kSchemaVersion}, {"sample_id", f.sample_id}, {"reason", f.reason}});
    }
    write_jsonl(failures, layout_.distill_failures());

    std::size_t ok = 0;
    for (const auto& r : result.records) ok += r.answer_ok;
    record_stage("distill", {{"samples", samples.size()},
                             {"records", result.records.size()},
                             {"answer_ok", ok},
                             {"failures", result.failures.size()},
                             {"teacher_model", options.model}});
}

void Pipeline::extract() {
    const auto cots = read_records<CoTRecord>(layout_.cot());
    ExtractOptions options;
    options.max_targets = config_.extract.max_targets;
    std::vector<SampleSubQuestions> out;
    std::size_t total = 0;
    for (const auto& c : cots) {
        const auto targets = extract_targets(c.cot_text, options);
        out.push_back({c.sample_id, build_sub_questions(targets)});
        total += targets.size();
    }
    write_records(out, layout_.sub_questions());
    record_stage("extract", {{"records", out.size()}, {"targets", total}});
}

void Pipeline::bootstrap() {
    const auto by_id = samples_by_id(read_records<QASample>(layout_.samples()));
    std::vector<GroundingJob> jobs;
    std::size_t targets = 0;
    for (auto& s : read_records<SampleSubQuestions>(layout_.sub_questions())) {
        targets += s.sub_questions.size();
        jobs.push_back({lookup(by_id, s.sample_id), std::move(s.sub_questions)});
    }

    BootstrapConfig bc;
    bc.max_iterations = config_.bootstrap.max_iterations;
    bc.state_dir = layout_.bootstrap_dir();
    bc.base_model = config_.backend.model;
    bc.pad_frac = config_.bootstrap.pad_frac;
    bc.hyper = config_.bootstrap.hyper;
    if (config_.bootstrap.trainer == "noop") bc.trainer = std::make_shared<NoopTrainer>();
    else bc.trainer = std::make_shared<CommandTrainer>(config_.bootstrap.trainer);
    bc.after_iteration = after_iteration;

    const auto state = run_bootstrap(jobs, gateway_, profile(), bc);

    std::vector<VerifiedEntry> all;
    for (const auto& [id, boxes] : state.verified) {
        for (const auto& b : boxes) all.push_back({id, b});
    }
    write_records(all, layout_.verified());
    record_stage("bootstrap", {{"iterations", state.iteration},
                               {"counts_per_iteration", state.counts_per_iteration},
                               {"model_ref", state.model_ref},
                               {"targets", targets},
                               {"trainer", config_.bootstrap.trainer}});
}

void Pipeline::assemble() {
    const auto cots = read_records<CoTRecord>(layout_.cot());
    const auto by_id = samples_by_id(read_records<QASample>(layout_.samples()));
    const auto state = load_state(layout_.bootstrap_dir());

    std::vector<GCoTRecord> records;
    std::vector<ConversationRecord> train;
    std::size_t boxes = 0;
    for (const auto& c : cots) {
        const auto it = state.verified.find(c.sample_id);
        const std::vector<VerifiedBox> none;
        auto rec = inject_boxes(c, it == state.verified.end() ? none : it->second);
        boxes += rec.boxes.size();
        if (rec.answer_ok) train.push_back(gcot_training_record(lookup(by_id, c.sample_id), rec));
        records.push_back(std::move(rec));
    }
    write_records(records, layout_.gcot_assembled());
    write_records(train, layout_.gcot_train());

    TrainingManifest manifest = config_.bootstrap.hyper;
    manifest.task = TrainingTask::gcot;
    manifest.records_uri = fs::absolute(layout_.gcot_train()).generic_string();
    manifest.base_model = config_.backend.model;
    write_file_atomic(layout_.gcot_train_manifest(), to_json(manifest).dump() + "\n");

    record_stage("assemble", {{"records", records.size()}, {"annotated_boxes", boxes}, {"train_records", train.size()}});
}

void Pipeline::augment() {
    const auto samples = read_records<QASample>(layout_.samples());
    std::string model = config_.backend.model;
    std::error_code ec;
    if (fs::exists(state_file(layout_.bootstrap_dir()), ec)) model = load_state(layout_.bootstrap_dir()).model_ref;

    GenerateOptions gen;
    gen.model = model;
    gen.k = config_.augment.k;
    gen.temperature = config_.augment.temperature;
    gen.base_seed = config_.augment.base_seed;
    gen.relaxed = config_.augment.relaxed;
    const GroundingContext ctx{gateway_, profile(), model, config_.bootstrap.pad_frac, kDefaultMaxTokens};

    std::vector<GCoTRecord> kept;
    std::vector<ConversationRecord> train;
    std::vector<json> log;
    std::size_t generated = 0;
    std::size_t shortfall = 0;
    for (const auto& s : samples) {
        const auto candidates = generate_candidates(s, gateway_, profile(), gen);
        auto sel = verify_and_select(candidates, s, ctx, config_.augment.max_keep, config_.augment.relaxed);
        generated += candidates.size();
        shortfall += sel.shortfall;
        log.push_back({{"v", kSchemaVersion},
                       {"sample_id", s.sample_id},
                       {"generated", candidates.size()},
                       {"kept", sel.kept.size()},
                       {"shortfall", sel.shortfall},
                       {"rejections", sel.rejections}});
        for (auto& r : sel.kept) {
            train.push_back(gcot_training_record(s, r));
            kept.push_back(std::move(r));
        }
    }
    write_records(kept, layout_.gcot_augmented());
    write_records(train, layout_.gcot_selftrain());
    write_jsonl(log, layout_.augment_log());
    record_stage("augment", {{"samples", samples.size()},
                             {"generated", generated},
                             {"kept", kept.size()},
                             {"shortfall", shortfall},
                             {"k", gen.k},
                             {"max_keep", config_.augment.max_keep},
                             {"model", model}});
}

void Pipeline::eval() {
    const auto& e = config_.eval;
    const auto dir = layout_.eval_dir();
    fs::create_directories(dir);

    std::map<std::string, QASample> by_id;
    std::error_code ec;
    if (fs::exists(layout_.samples(), ec)) {
        const auto samples = read_records<QASample>(layout_.samples());
        by_id = samples_by_id(samples);
        std::vector<json> splits;
        for (int size : e.sizes) {
            if (static_cast<std::size_t>(size) > samples.size()) continue;
            for (auto seed : e.seeds) {
                std::vector<std::string> ids;
                for (const auto& s : sample_fewshot(samples, static_cast<std::size_t>(size), seed)) {
                    ids.push_back(s.sample_id);
                }
                splits.push_back({{"v", kSchemaVersion}, {"sample_size", size}, {"seed", seed}, {"sample_ids", ids}});
            }
        }
        write_jsonl(splits, dir / "splits.jsonl");
    }

    const auto pred_path = e.predictions.empty() ? dir / "predictions.jsonl" : e.predictions;
    std::vector<EvalRun> runs;
    for (const auto& [line, j] : read_jsonl(pred_path)) {
        try {
            if (!j.is_object()) throw SchemaError(line, "record is not a JSON object");
            const int size = j.at("sample_size").get<int>();
            const auto seed = j.at("seed").get<std::uint64_t>();
            const auto id = j.at("sample_id").get<std::string>();
            std::string gold;
            if (j.contains("gold")) gold = j.at("gold").get<std::string>();
            else if (const auto it = by_id.find(id); it != by_id.end()) gold = it->second.gold_answer;
            else throw SchemaError(line, "no gold answer for sample '" + id + "'");
            auto run = std::find_if(runs.begin(), runs.end(),
                                    [&](const EvalRun& r) { return r.sample_size == size && r.seed == seed; });
            if (run == runs.end()) {
                runs.push_back({size, seed, {}, {}});
                run = std::prev(runs.end());
            }
            run->predictions.push_back(j.at("prediction").get<std::string>());
            run->golds.push_back(std::move(gold));
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(line, ex.what());
        }
    }

    std::vector<EvalReport> reports;
    try {
        reports = evaluate(runs, e.sizes, e.seeds, e.relaxed);
    } catch (const InvalidArgument& ex) {
        throw SchemaError(0, std::string("predictions: ") + ex.what());
    }
    json all = json::array();
    for (const auto& r : reports) {
        write_file_atomic(dir / ("report_" + std::to_string(r.sample_size) + ".json"),
                          report_to_json(r).dump(2) + "\n");
        all.push_back(report_to_json(r));
    }
    write_file_atomic(dir / "reports.json", all.dump(2) + "\n");
    write_file_atomic(dir / "report.txt", render_report_table(reports));
    write_file_atomic(dir / "report.csv", render_report_csv(reports));
    record_stage("eval", {{"sizes", e.sizes}, {"seeds", e.seeds}, {"relaxed", e.relaxed}, {"reports", all}});
}

void Pipeline::run_all() {
    distill();
    extract();
    bootstrap();
    assemble();
    augment();
    std::error_code ec;
    const auto pred = config_.eval.predictions.empty() ? layout_.eval_dir() / "predictions.jsonl"
                                                       : config_.eval.predictions;
    if (fs::exists(pred, ec)) eval();
}

}  // namespace gcot
