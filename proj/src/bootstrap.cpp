// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/bootstrap.hpp"

#include "gcot/concurrency.hpp"
#include "gcot/dataset_io.hpp"
#include "gcot/synth_world.hpp"
#include "gcot/text_util.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sys/wait.h>

namespace gcot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path iteration_file(const fs::path& dir, const char* stem, int k, const char* ext) {
    return dir / (std::string(stem) + "_iter" + std::to_string(k) + ext);
}

fs::path shard_path(const fs::path& dir, int k) { return iteration_file(dir, "verified", k, ".jsonl"); }
fs::path grounding_path(const fs::path& dir, int k) { return iteration_file(dir, "grounding", k, ".jsonl"); }
fs::path manifest_path(const fs::path& dir, int k) { return iteration_file(dir, "train", k, ".json"); }

fs::path out_path(const fs::path& manifest) { return fs::path(manifest).concat(".out"); }

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

void check_config(const BootstrapConfig& config) {
    if (config.max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
    if (config.state_dir.empty()) throw InvalidArgument("bootstrap needs a state directory");
    if (config.base_model.empty()) throw InvalidArgument("bootstrap needs a base model");
    if (!config.trainer) throw InvalidArgument("bootstrap needs a trainer");
}

void finish_training(BootstrapState& state, const BootstrapConfig& config) {
    const auto mpath = manifest_path(config.state_dir, state.iteration);
    const auto manifests = read_records<TrainingManifest>(mpath);
    if (manifests.size() != 1) throw SchemaError(1, mpath.string() + " must hold exactly one manifest");
    state.model_ref = config.trainer->train({manifests.front(), mpath, state.model_ref, state.iteration});
    state.training_pending = false;
    save_state(state, config.state_dir);
}

}  // namespace

int BootstrapState::verified_count() const {
    int n = 0;
    for (const auto& [id, boxes] : verified) n += static_cast<int>(boxes.size());
    return n;
}

CommandTrainer::CommandTrainer(std::string command) : command_(std::move(command)) {
    if (text::trim(command_).empty()) throw InvalidArgument("trainer command is empty");
}

std::string CommandTrainer::train(const TrainRequest& request) {
    const auto out = out_path(request.manifest_path);
    std::error_code ec;
    fs::remove(out, ec);
    const auto cmd = command_ + " " + shell_quote(request.manifest_path.string());
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
        throw TrainerFailed("trainer '" + command_ + "' exited with status " + std::to_string(code));
    }
    if (!fs::is_regular_file(out, ec)) throw TrainerFailed("trainer wrote no " + out.string());
    const auto model = std::string(text::trim(read_text_file(out)));
    if (model.empty()) throw TrainerFailed(out.string() + " is empty");
    return model;
}

std::string NoopTrainer::train(const TrainRequest& request) {
    auto model = next_round_model(request.current_model);
    write_file_atomic(out_path(request.manifest_path), model + "\n");
    return model;
}

fs::path state_file(const fs::path& state_dir) { return state_dir / "state.json"; }

void save_state(const BootstrapState& state, const fs::path& state_dir) {
    const json j{
        {"v", kSchemaVersion},
        {"iteration", state.iteration},
        {"counts_per_iteration", state.counts_per_iteration},
        {"model_ref", state.model_ref},
        {"training_pending", state.training_pending},
    };
    write_file_atomic(state_file(state_dir), j.dump(2) + "\n");
}

BootstrapState load_state(const fs::path& state_dir) {
    const auto path = state_file(state_dir);
    const auto text = read_text_file(path);
    const auto j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError(1, path.string() + " is not a JSON object");
    BootstrapState state;
    try {
        if (j.at("v").get<std::string>() != kSchemaVersion) throw SchemaError(1, "unsupported state version");
        state.iteration = j.at("iteration").get<int>();
        state.counts_per_iteration = j.at("counts_per_iteration").get<std::vector<int>>();
        state.model_ref = j.at("model_ref").get<std::string>();
        state.training_pending = j.at("training_pending").get<bool>();
    } catch (const json::exception& e) {
        throw SchemaError(1, path.string() + ": " + e.what());
    }
    if (state.iteration < 0 || static_cast<int>(state.counts_per_iteration.size()) != state.iteration) {
        throw SchemaError(1, path.string() + ": counts_per_iteration does not match iteration");
    }
    for (int k = 1; k <= state.iteration; ++k) {
        for (auto& e : read_records<VerifiedEntry>(shard_path(state_dir, k))) {
            state.verified[e.sample_id].push_back(std::move(e.box));
        }
    }
    for (auto& [id, boxes] : state.verified) {
        std::sort(boxes.begin(), boxes.end(), [](const VerifiedBox& a, const VerifiedBox& b) {
            return a.sub_question.index_t < b.sub_question.index_t;
        });
    }
    if (state.iteration > 0 && state.verified_count() != state.counts_per_iteration.back()) {
        throw SchemaError(1, path.string() + ": verified shards disagree with counts_per_iteration");
    }
    return state;
}

BootstrapState run_iteration(const BootstrapState& state, std::span<const GroundingJob> jobs, Gateway& gateway,
                             const BackendProfile& profile, const BootstrapConfig& config) {
    check_config(config);
    if (state.iteration >= config.max_iterations) {
        throw InvalidArgument("iteration " + std::to_string(state.iteration) + " already reached max_iterations");
    }
    if (state.training_pending) throw InvalidArgument("previous iteration has not finished training");
    fs::create_directories(config.state_dir);

    BootstrapState next = state;
    next.iteration = state.iteration + 1;
    if (next.model_ref.empty()) next.model_ref = config.base_model;

    struct Task {
        std::size_t job;
        const SubQuestion* subq;
    };
    std::vector<Task> tasks;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        std::set<int> matched;
        if (const auto it = state.verified.find(jobs[j].sample.sample_id); it != state.verified.end()) {
            for (const auto& v : it->second) matched.insert(v.sub_question.index_t);
        }
        for (const auto& q : jobs[j].sub_questions) {
            if (!matched.contains(q.index_t)) tasks.push_back({j, &q});
        }
    }

    const GroundingContext ctx{gateway, profile, next.model_ref, config.pad_frac, config.max_tokens};
    std::vector<VerifiedBox> results(tasks.size());
    parallel_for(tasks.size(), static_cast<std::size_t>(profile.max_in_flight), [&](std::size_t i) {
        results[i] = ground_one(*tasks[i].subq, jobs[tasks[i].job].sample.image, ctx, next.iteration);
    });

    std::vector<VerifiedEntry> shard;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (results[i].verdict != Verdict::match) continue;
        const auto& id = jobs[tasks[i].job].sample.sample_id;
        shard.push_back({id, results[i]});
        next.verified[id].push_back(std::move(results[i]));
    }
    for (auto& [id, boxes] : next.verified) {
        std::sort(boxes.begin(), boxes.end(), [](const VerifiedBox& a, const VerifiedBox& b) {
            return a.sub_question.index_t < b.sub_question.index_t;
        });
    }
    next.counts_per_iteration.push_back(next.verified_count());

    std::vector<ConversationRecord> grounding;
    for (const auto& job : jobs) {
        const auto it = next.verified.find(job.sample.sample_id);
        if (it == next.verified.end()) continue;
        for (const auto& v : it->second) {
            grounding.push_back({job.sample.sample_id, job.sample.image.uri.generic_string(),
                                 grounding_prompt(v.sub_question), format_nbox(quantize(*v.box))});
        }
    }
    const auto gpath = fs::absolute(grounding_path(config.state_dir, next.iteration));
    write_records(grounding, gpath);
    write_records(shard, shard_path(config.state_dir, next.iteration));

    TrainingManifest manifest = config.hyper;
    manifest.task = TrainingTask::grounding;
    manifest.records_uri = gpath.generic_string();
    manifest.base_model = config.base_model;
    const std::vector<TrainingManifest> manifests{manifest};
    write_records(manifests, manifest_path(config.state_dir, next.iteration));

    next.training_pending = true;
    save_state(next, config.state_dir);
    finish_training(next, config);
    return next;
}

BootstrapState run_bootstrap(std::span<const GroundingJob> jobs, Gateway& gateway, const BackendProfile& profile,
                             const BootstrapConfig& config) {
    check_config(config);
    BootstrapState state;
    std::error_code ec;
    if (fs::exists(state_file(config.state_dir), ec)) {
        state = load_state(config.state_dir);
        if (state.training_pending) {
            finish_training(state, config);
            if (config.after_iteration) config.after_iteration(state);
        }
    } else {
        state.model_ref = config.base_model;
    }
    while (state.iteration < config.max_iterations) {
        state = run_iteration(state, jobs, gateway, profile, config);
        if (config.after_iteration) config.after_iteration(state);
    }
    return state;
}

}  // namespace gcot
