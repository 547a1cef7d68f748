// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/core_model.hpp"
#include "gcot/grounder.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gcot {

inline constexpr int kDefaultMaxIterations = 3;

/// One sample and the sub-questions to ground for it.
struct GroundingJob {
    QASample sample;
    std::vector<SubQuestion> sub_questions;
};

struct BootstrapState {
    int iteration = 0;
    /// Match-verdict boxes only, sorted by sub-question index.
    std::map<std::string, std::vector<VerifiedBox>> verified;
    /// Cumulative match count after each iteration.
    std::vector<int> counts_per_iteration;
    std::string model_ref;
    /// Set between persisting an iteration's boxes and the trainer returning.
    bool training_pending = false;

    int verified_count() const;
    bool operator==(const BootstrapState&) const = default;
};

/// What the trainer is asked to do after one iteration.
struct TrainRequest {
    TrainingManifest manifest;
    std::filesystem::path manifest_path;
    std::string current_model;
    int iteration = 0;
};

class Trainer {
public:
    virtual ~Trainer() = default;
    /// Returns the model identifier to use from now on. Throws TrainerFailed.
    virtual std::string train(const TrainRequest& request) = 0;
};

/// Runs `<command> <manifest_path>` through the shell, expects exit 0 and a
/// non-empty `<manifest_path>.out` holding the new model identifier.
class CommandTrainer final : public Trainer {
public:
    explicit CommandTrainer(std::string command);
    std::string train(const TrainRequest& request) override;

private:
    std::string command_;
};

/// Stand-in for the scripted oracle: writes `.out` with the next round model
/// ("base@k" -> "base@k+1") without training anything.
class NoopTrainer final : public Trainer {
public:
    std::string train(const TrainRequest& request) override;
};

struct BootstrapConfig {
    int max_iterations = kDefaultMaxIterations;
    /// Holds state.json, verified shards, grounding JSONL and manifests.
    std::filesystem::path state_dir;
    /// Model identifier for the first iteration and base of every manifest.
    std::string base_model;
    double pad_frac = kDefaultCropPad;
    int max_tokens = kDefaultMaxTokens;
    TrainingManifest hyper;  // task, records_uri and base_model are filled per iteration
    std::shared_ptr<Trainer> trainer;
    /// Called after each completed (trained and persisted) iteration. Tests
    /// throw from it to simulate a crash.
    std::function<void(const BootstrapState&)> after_iteration;
};

std::filesystem::path state_file(const std::filesystem::path& state_dir);

void save_state(const BootstrapState& state, const std::filesystem::path& state_dir);
/// Rebuilds the state from state.json and its verified shards.
BootstrapState load_state(const std::filesystem::path& state_dir);

/// Grounds every sub-question not yet matched, merges new matches, appends the
/// cumulative count, writes the grounding JSONL and manifest, persists, trains
/// and persists again with the new model. TrainerFailed leaves the state on
/// disk with training_pending set.
BootstrapState run_iteration(const BootstrapState& state, std::span<const GroundingJob> jobs, Gateway& gateway,
                             const BackendProfile& profile, const BootstrapConfig& config);

/// Resumes from state_dir when state.json exists, finishes a pending training
/// step, then iterates until max_iterations.
BootstrapState run_bootstrap(std::span<const GroundingJob> jobs, Gateway& gateway, const BackendProfile& profile,
                             const BootstrapConfig& config);

}  // namespace gcot
