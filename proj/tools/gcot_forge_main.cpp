// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

// gcot-forge: command-line entry point for the grounded-CoT data pipeline.
// Exit codes: 0 success, 1 data error, 2 configuration or usage error.

#include "gcot/config.hpp"
#include "gcot/dataset_io.hpp"
#include "gcot/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitConfig = 2;

template <class T>
std::vector<T> parse_list(const std::string& csv, const char* flag) {
    std::vector<T> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = std::min(csv.find(',', pos), csv.size());
        const auto item = csv.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            const auto v = std::stoll(item, &used);
            if (used != item.size() || v < 0) throw std::invalid_argument(item);
            out.push_back(static_cast<T>(v));
        } catch (const std::exception&) {
            throw gcot::ConfigError(std::string(flag) + " expects comma-separated non-negative integers, got '" +
                                    csv + "'");
        }
        pos = comma + 1;
    }
    return out;
}

struct Overrides {
    std::optional<std::string> run_dir;
    // synth
    std::optional<std::uint64_t> seed;
    std::optional<int> images;
    std::optional<int> items;
    std::optional<std::string> out;
    // data and backend
    std::optional<std::string> data;
    std::optional<std::string> adapter;
    std::optional<std::string> model;
    std::optional<std::string> teacher;
    // stages
    std::optional<std::size_t> max_targets;
    std::optional<int> max_iterations;
    std::optional<std::string> trainer;
    std::optional<int> k;
    std::optional<std::size_t> max_keep;
    std::optional<std::uint64_t> base_seed;
    std::optional<std::string> sizes;
    std::optional<std::string> seeds;
    std::optional<std::string> predictions;
    bool relaxed = false;
};

void apply(const Overrides& o, gcot::PipelineConfig& c) {
    if (o.run_dir) c.run_dir = *o.run_dir;
    if (o.seed) c.synth.seed = *o.seed;
    if (o.images) c.synth.images = *o.images;
    if (o.items) c.synth.items = *o.items;
    if (o.out) c.synth.out = *o.out;
    if (o.data) c.data.path = *o.data;
    if (o.adapter) {
        try {
            c.data.adapter = gcot::adapter_from_string(*o.adapter);
        } catch (const gcot::InvalidArgument& e) {
            throw gcot::ConfigError(e.what());
        }
    }
    if (o.model) c.backend.model = *o.model;
    if (o.teacher) c.backend.teacher_model = *o.teacher;
    if (o.max_targets) c.extract.max_targets = *o.max_targets;
    if (o.max_iterations) c.bootstrap.max_iterations = *o.max_iterations;
    if (o.trainer) c.bootstrap.trainer = *o.trainer;
    if (o.k) c.augment.k = *o.k;
    if (o.max_keep) c.augment.max_keep = *o.max_keep;
    if (o.base_seed) c.augment.base_seed = *o.base_seed;
    if (o.sizes) c.eval.sizes = parse_list<int>(*o.sizes, "--sizes");
    if (o.seeds) c.eval.seeds = parse_list<std::uint64_t>(*o.seeds, "--seeds");
    if (o.predictions) c.eval.predictions = *o.predictions;
    if (o.relaxed) c.eval.relaxed = true;
}

void add_data_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--data", o.data, "Dataset annotation file or directory");
    cmd->add_option("--adapter", o.adapter, "chartqa|tabmwp|sroie|dvqa|tatqa|synth|generic");
}

void add_model_flag(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--model", o.model, "Model identifier of the grounding/generating model");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gcot-forge: builds grounded chain-of-thought training data"};
    app.set_version_flag("--version", std::string(gcot::tool_version()));
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    Overrides o;
    app.add_option("-c,--config", config_path, "TOML configuration file")->check(CLI::ExistingFile);
    app.add_option("--run-dir", o.run_dir, "Run directory (overrides [run] dir)");

    auto* synth = app.add_subcommand("synth", "Render a synthetic table world (images + manifest)");
    synth->add_option("--seed", o.seed, "World seed");
    synth->add_option("--images", o.images, "Number of images");
    synth->add_option("--items", o.items, "Items per image (2..10)");
    synth->add_option("--out", o.out, "Output directory");

    auto* distill = app.add_subcommand("distill", "Distill CoT from the teacher model");
    add_data_flags(distill, o);
    distill->add_option("--teacher", o.teacher, "Teacher model identifier");

    auto* extract = app.add_subcommand("extract", "Extract targets and build sub-questions");
    extract->add_option("--max-targets", o.max_targets, "Cap on targets per CoT");

    auto* bootstrap = app.add_subcommand("bootstrap", "Run the ground-verify-train loop");
    bootstrap->add_option("--max-iterations", o.max_iterations, "Number of iterations");
    bootstrap->add_option("--trainer", o.trainer, "'noop' or a trainer command");
    add_model_flag(bootstrap, o);

    auto* assemble = app.add_subcommand("assemble", "Inject verified boxes into CoT text");
    add_model_flag(assemble, o);

    auto* augment = app.add_subcommand("augment", "Self-generate GCoT candidates and keep verified ones");
    augment->add_option("--k", o.k, "Candidates per question");
    augment->add_option("--max-keep", o.max_keep, "Records kept per question");
    augment->add_option("--base-seed", o.base_seed, "Seed of the first candidate");
    add_model_flag(augment, o);

    auto* eval = app.add_subcommand("eval", "Few-shot accuracy reports (mean and population std)");
    eval->add_option("--sizes", o.sizes, "Comma-separated sample sizes");
    eval->add_option("--seeds", o.seeds, "Comma-separated seeds");
    eval->add_option("--predictions", o.predictions, "Predictions JSONL");
    eval->add_flag("--relaxed", o.relaxed, "5% relative tolerance for numeric answers");

    auto* run_all = app.add_subcommand("run-all", "distill, extract, bootstrap, assemble, augment (and eval)");
    add_data_flags(run_all, o);
    add_model_flag(run_all, o);
    run_all->add_option("--max-iterations", o.max_iterations, "Bootstrap iterations");
    run_all->add_option("--trainer", o.trainer, "'noop' or a trainer command");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        gcot::PipelineConfig config = config_path ? gcot::load_config(*config_path) : gcot::PipelineConfig{};
        apply(o, config);
        gcot::Pipeline pipeline(std::move(config));
        const auto& cfg = pipeline.config();

        if (synth->parsed()) {
            gcot::RunLock lock(cfg.synth.out);
            pipeline.synth();
            std::cout << "synth: wrote " << (cfg.synth.out / "manifest.json").string() << "\n";
            return kExitOk;
        }

        gcot::RunLock lock(cfg.run_dir);
        if (distill->parsed()) pipeline.distill();
        else if (extract->parsed()) pipeline.extract();
        else if (bootstrap->parsed()) pipeline.bootstrap();
        else if (assemble->parsed()) pipeline.assemble();
        else if (augment->parsed()) pipeline.augment();
        else if (eval->parsed()) {
            pipeline.eval();
            std::cout << gcot::read_text_file(pipeline.layout().eval_dir() / "report.txt");
        } else if (run_all->parsed()) pipeline.run_all();

        for (auto* cmd : app.get_subcommands()) std::cout << cmd->get_name() << ": ok (" << cfg.run_dir.string() << ")\n";
        return kExitOk;
    } catch (const gcot::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gcot::InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gcot::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
