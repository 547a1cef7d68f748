// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/bootstrap.hpp"
#include "gcot/config.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace gcot {

std::string_view tool_version();

/// File names inside a run directory.
struct RunLayout {
    std::filesystem::path dir;

    std::filesystem::path samples() const { return dir / "samples.jsonl"; }
    std::filesystem::path cot() const { return dir / "cot.jsonl"; }
    std::filesystem::path distill_failures() const { return dir / "distill_failures.jsonl"; }
    std::filesystem::path sub_questions() const { return dir / "subquestions.jsonl"; }
    std::filesystem::path bootstrap_dir() const { return dir / "bootstrap"; }
    std::filesystem::path verified() const { return dir / "verified.jsonl"; }
    std::filesystem::path gcot_assembled() const { return dir / "gcot_assembled.jsonl"; }
    std::filesystem::path gcot_train() const { return dir / "gcot_train.jsonl"; }
    std::filesystem::path gcot_train_manifest() const { return dir / "gcot_train.json"; }
    std::filesystem::path gcot_augmented() const { return dir / "gcot_augmented.jsonl"; }
    std::filesystem::path augment_log() const { return dir / "augment_log.jsonl"; }
    std::filesystem::path gcot_selftrain() const { return dir / "gcot_selftrain.jsonl"; }
    std::filesystem::path eval_dir() const { return dir / "eval"; }
    std::filesystem::path metadata() const { return dir / "run_metadata.json"; }
    std::filesystem::path lock() const { return dir / ".lock"; }
};

/// Exclusive advisory lock on <run dir>/.lock, released on destruction or
/// process exit. Throws IoError when another process holds it.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    int fd_ = -1;
};

/// Everything a stage needs: the resolved config, its backend and the gateway.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    const PipelineConfig& config() const { return config_; }
    const RunLayout& layout() const { return layout_; }
    Gateway& gateway() { return gateway_; }
    const BackendProfile& profile();

    /// Writes images and manifest under config.synth.out.
    void synth();
    void distill();
    void extract();
    void bootstrap();
    void assemble();
    void augment();
    void eval();
    /// distill, extract, bootstrap, assemble, augment, then eval when a
    /// predictions file exists.
    void run_all();

    /// Test hook forwarded to the bootstrap loop.
    std::function<void(const BootstrapState&)> after_iteration;

private:
    void record_stage(std::string_view stage, const nlohmann::json& summary);

    PipelineConfig config_;
    RunLayout layout_;
    Gateway gateway_;
    std::optional<BackendProfile> profile_;
};

}  // namespace gcot
