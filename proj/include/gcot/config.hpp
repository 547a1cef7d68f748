// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/bootstrap.hpp"
#include "gcot/dataset_io.hpp"
#include "gcot/synth_world.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gcot {

struct SynthSection {
    std::uint64_t seed = 7;
    int images = 20;
    int items = 4;
    std::filesystem::path out = "synth";
};

struct BackendSection {
    /// "oracle" (scripted, in-process) or "http" (chat-completions endpoint).
    std::string kind = "oracle";
    std::string name = "default";
    std::string endpoint;
    /// Model that is grounded, bootstrapped and asked to self-generate.
    std::string model = "oracle";
    /// Third-party model used for distillation; defaults to `model`.
    std::string teacher_model;
    std::string api_key_env = "GCOT_API_KEY";
    double timeout_s = 120.0;
    int max_retries = 3;
    int max_in_flight = 4;
};

struct OracleSection {
    /// Synth manifest; defaults to data.path when the data adapter is synth.
    std::filesystem::path world;
    OraclePolicy policy;
};

struct DataSection {
    Adapter adapter = Adapter::synth;
    std::filesystem::path path;
};

struct DistillSection {
    bool relaxed = false;
    bool attach_image = true;
    int max_tokens = kDefaultMaxTokens;
};

struct ExtractSection {
    std::size_t max_targets = 12;
};

struct BootstrapSection {
    int max_iterations = kDefaultMaxIterations;
    /// "noop" or a shell command invoked as `<trainer> <manifest_path>`.
    std::string trainer = "noop";
    double pad_frac = kDefaultCropPad;
    TrainingManifest hyper;
};

struct AugmentSection {
    int k = 8;
    std::size_t max_keep = 3;
    std::uint64_t base_seed = 0;
    double temperature = kGenerationTemperature;
    bool relaxed = false;
};

struct EvalSection {
    std::vector<int> sizes{8, 16, 32, 64, 128};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    bool relaxed = false;
    /// JSONL of per-(size, seed, sample) predictions; defaults to <run>/eval/predictions.jsonl.
    std::filesystem::path predictions;
};

struct PipelineConfig {
    std::filesystem::path run_dir = "run";
    SynthSection synth;
    BackendSection backend;
    OracleSection oracle;
    DataSection data;
    DistillSection distill;
    ExtractSection extract;
    BootstrapSection bootstrap;
    AugmentSection augment;
    EvalSection eval;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment.
std::optional<std::string> process_env(const std::string& name);

/// Replaces every ${NAME} with the variable's value. "$$" yields "$".
/// Throws ConfigError for an unset variable or an unterminated reference.
std::string interpolate_env(std::string_view text, const EnvLookup& env = process_env);

/// Parses TOML text. Relative paths resolve against `base_dir`. Unknown
/// sections or keys and mistyped values throw ConfigError.
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                            const EnvLookup& env = process_env);
PipelineConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

/// Throws ConfigError when values are out of range.
void validate(const PipelineConfig& config);

/// Resolved configuration as JSON (keys sorted), the input of the config hash.
nlohmann::json config_to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

}  // namespace gcot
