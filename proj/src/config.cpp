// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/config.hpp"

#include "gcot/image.hpp"

#include <cstdlib>
#include <set>

#include <toml.hpp>

namespace gcot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void interpolate_tree(toml::node& node, const EnvLookup& env) {
    if (auto* s = node.as_string()) {
        s->get() = interpolate_env(s->get(), env);
    } else if (auto* t = node.as_table()) {
        for (auto&& [k, v] : *t) interpolate_tree(v, env);
    } else if (auto* a = node.as_array()) {
        for (auto& v : *a) interpolate_tree(v, env);
    }
}

/// Typed access to one [section] that remembers which keys were read.
class Section {
public:
    Section(const toml::table* table, std::string name, fs::path base)
        : table_(table), name_(std::move(name)), base_(std::move(base)) {}

    void get(const char* key, std::string& out) { read_scalar<std::string>(key, out, "a string"); }
    void get(const char* key, bool& out) { read_scalar<bool>(key, out, "a boolean"); }

    void get(const char* key, int& out) {
        std::int64_t v = out;
        read_scalar<std::int64_t>(key, v, "an integer");
        if (v < INT32_MIN || v > INT32_MAX) fail(key, "is out of range");
        out = static_cast<int>(v);
    }

    void get(const char* key, std::uint64_t& out) {
        std::int64_t v = static_cast<std::int64_t>(out);
        read_scalar<std::int64_t>(key, v, "an integer");
        if (v < 0) fail(key, "must not be negative");
        out = static_cast<std::uint64_t>(v);
    }

    void get(const char* key, double& out) {
        const auto* node = find(key);
        if (!node) return;
        if (const auto v = node->value<double>()) out = *v;  // accepts integers too
        else fail(key, "must be a number");
    }

    void get_path(const char* key, fs::path& out) {
        std::string s;
        if (!find(key)) return;
        get(key, s);
        out = fs::path(s).is_absolute() ? fs::path(s) : base_ / s;
    }

    template <class T>
    void get_list(const char* key, std::vector<T>& out) {
        const auto* node = find(key);
        if (!node) return;
        const auto* arr = node->as_array();
        if (!arr) fail(key, "must be an array");
        std::vector<T> values;
        for (const auto& e : *arr) {
            if constexpr (std::is_same_v<T, std::string>) {
                const auto v = e.value<std::string>();
                if (!v) fail(key, "must hold strings");
                values.push_back(*v);
            } else if constexpr (std::is_same_v<T, double>) {
                const auto v = e.value<double>();
                if (!v) fail(key, "must hold numbers");
                values.push_back(*v);
            } else {
                const auto v = e.value<std::int64_t>();
                if (!v || *v < 0) fail(key, "must hold non-negative integers");
                values.push_back(static_cast<T>(*v));
            }
        }
        out = std::move(values);
    }

    void reject_unknown() const {
        if (!table_) return;
        for (auto&& [k, v] : *table_) {
            if (!used_.contains(std::string(k.str()))) {
                throw ConfigError("unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
            }
        }
    }

    [[noreturn]] void fail(const char* key, const std::string& what) const {
        throw ConfigError("[" + name_ + "] " + key + " " + what);
    }

private:
    const toml::node* find(const char* key) {
        used_.insert(key);
        if (!table_) return nullptr;
        return table_->get(key);
    }

    template <class T, class U>
    void read_scalar(const char* key, U& out, const char* what) {
        const auto* node = find(key);
        if (!node) return;
        bool ok = false;
        if constexpr (std::is_same_v<T, std::string>) ok = node->is_string();
        else if constexpr (std::is_same_v<T, bool>) ok = node->is_boolean();
        else ok = node->is_integer();
        if (!ok) fail(key, std::string("must be ") + what);
        out = *node->value<T>();
    }

    const toml::table* table_;
    std::string name_;
    fs::path base_;
    std::set<std::string> used_;
};

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

std::string interpolate_env(std::string_view text, const EnvLookup& env) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '$') {
            out.push_back(text[i]);
            continue;
        }
        if (i + 1 < text.size() && text[i + 1] == '$') {
            out.push_back('$');
            ++i;
            continue;
        }
        if (i + 1 < text.size() && text[i + 1] == '{') {
            const auto close = text.find('}', i + 2);
            if (close == std::string_view::npos) throw ConfigError("unterminated ${ in '" + std::string(text) + "'");
            const std::string name(text.substr(i + 2, close - i - 2));
            if (name.empty()) throw ConfigError("empty ${} reference");
            const auto value = env(name);
            if (!value) throw ConfigError("environment variable " + name + " is not set");
            out += *value;
            i = close;
            continue;
        }
        out.push_back('$');
    }
    return out;
}

PipelineConfig parse_config(std::string_view toml_text, const fs::path& base_dir, const EnvLookup& env) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        throw ConfigError("config: " + std::string(e.description()) + " at line " +
                          std::to_string(e.source().begin.line));
    }
    interpolate_tree(root, env);

    static const std::set<std::string> kSections{"run",       "synth",   "backend", "oracle", "data",
                                                 "distill",   "extract", "bootstrap", "augment", "eval"};
    for (auto&& [k, v] : root) {
        const std::string key(k.str());
        if (!kSections.contains(key)) throw ConfigError("unknown section [" + key + "]");
        if (!v.is_table()) throw ConfigError("[" + key + "] must be a table");
    }
    auto section = [&](const char* name) { return Section(root[name].as_table(), name, base_dir); };

    PipelineConfig c;
    {
        auto s = section("run");
        s.get_path("dir", c.run_dir);
        s.reject_unknown();
    }
    {
        auto s = section("synth");
        s.get("seed", c.synth.seed);
        s.get("images", c.synth.images);
        s.get("items", c.synth.items);
        s.get_path("out", c.synth.out);
        s.reject_unknown();
    }
    {
        auto s = section("backend");
        s.get("kind", c.backend.kind);
        s.get("name", c.backend.name);
        s.get("endpoint", c.backend.endpoint);
        s.get("model", c.backend.model);
        s.get("teacher_model", c.backend.teacher_model);
        s.get("api_key_env", c.backend.api_key_env);
        s.get("timeout_s", c.backend.timeout_s);
        s.get("max_retries", c.backend.max_retries);
        s.get("max_in_flight", c.backend.max_in_flight);
        s.reject_unknown();
    }
    {
        auto s = section("oracle");
        auto& p = c.oracle.policy;
        s.get_path("world", c.oracle.world);
        s.get_list("recall_schedule", p.recall_schedule);
        s.get("box_jitter_rate", p.box_jitter_rate);
        s.get("wrong_content_rate", p.wrong_content_rate);
        s.get("cot_error_rate", p.cot_error_rate);
        s.get("seed", p.seed);
        std::vector<std::string> script;
        s.get_list("candidate_script", script);
        if (!script.empty()) {
            p.candidate_script.clear();
            for (const auto& k : script) {
                try {
                    p.candidate_script.push_back(candidate_kind_from_string(k));
                } catch (const InvalidArgument& e) {
                    throw ConfigError(std::string("[oracle] candidate_script: ") + e.what());
                }
            }
        }
        s.reject_unknown();
    }
    {
        auto s = section("data");
        std::string adapter(to_string(c.data.adapter));
        s.get("adapter", adapter);
        try {
            c.data.adapter = adapter_from_string(adapter);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("[data] ") + e.what());
        }
        s.get_path("path", c.data.path);
        s.reject_unknown();
    }
    {
        auto s = section("distill");
        s.get("relaxed", c.distill.relaxed);
        s.get("attach_image", c.distill.attach_image);
        s.get("max_tokens", c.distill.max_tokens);
        s.reject_unknown();
    }
    {
        auto s = section("extract");
        s.get("max_targets", c.extract.max_targets);
        s.reject_unknown();
    }
    {
        auto s = section("bootstrap");
        s.get("max_iterations", c.bootstrap.max_iterations);
        s.get("trainer", c.bootstrap.trainer);
        s.get("pad_frac", c.bootstrap.pad_frac);
        s.get("lora_rank", c.bootstrap.hyper.lora_rank);
        s.get("lora_alpha", c.bootstrap.hyper.lora_alpha);
        s.get("learning_rate", c.bootstrap.hyper.learning_rate);
        s.get("epochs", c.bootstrap.hyper.epochs);
        s.reject_unknown();
    }
    {
        auto s = section("augment");
        s.get("k", c.augment.k);
        s.get("max_keep", c.augment.max_keep);
        s.get("base_seed", c.augment.base_seed);
        s.get("temperature", c.augment.temperature);
        s.get("relaxed", c.augment.relaxed);
        s.reject_unknown();
    }
    {
        auto s = section("eval");
        s.get_list("sizes", c.eval.sizes);
        s.get_list("seeds", c.eval.seeds);
        s.get("relaxed", c.eval.relaxed);
        s.get_path("predictions", c.eval.predictions);
        s.reject_unknown();
    }
    // built-in defaults are relative too
    for (fs::path* p : {&c.run_dir, &c.synth.out}) {
        if (p->is_relative()) *p = base_dir / *p;
    }
    return c;
}

PipelineConfig load_config(const fs::path& path, const EnvLookup& env) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, fs::absolute(path).parent_path(), env);
}

void validate(const PipelineConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(c.synth.images >= 1, "[synth] images must be >= 1");
    require(c.synth.items >= 2 && c.synth.items <= kMaxItemsPerImage,
            "[synth] items must lie in [2, " + std::to_string(kMaxItemsPerImage) + "]");
    require(c.backend.kind == "oracle" || c.backend.kind == "http", "[backend] kind must be 'oracle' or 'http'");
    require(!c.backend.model.empty(), "[backend] model must not be empty");
    require(c.backend.kind != "http" || !c.backend.endpoint.empty(), "[backend] endpoint is required for http");
    require(c.backend.max_in_flight >= 1, "[backend] max_in_flight must be >= 1");
    require(c.backend.max_retries >= 0, "[backend] max_retries must be >= 0");
    require(c.backend.timeout_s > 0, "[backend] timeout_s must be > 0");
    try {
        validate(c.oracle.policy);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("[oracle] ") + e.what());
    }
    require(c.distill.max_tokens >= 1, "[distill] max_tokens must be >= 1");
    require(c.extract.max_targets >= 1, "[extract] max_targets must be >= 1");
    require(c.bootstrap.max_iterations >= 0, "[bootstrap] max_iterations must be >= 0");
    require(!c.bootstrap.trainer.empty(), "[bootstrap] trainer must not be empty");
    require(c.bootstrap.pad_frac >= 0 && c.bootstrap.pad_frac <= kMaxCropPad, "[bootstrap] pad_frac must lie in [0, 0.1]");
    require(c.bootstrap.hyper.lora_rank >= 1 && c.bootstrap.hyper.lora_alpha >= 1 && c.bootstrap.hyper.epochs >= 1 &&
                c.bootstrap.hyper.learning_rate > 0,
            "[bootstrap] training hyperparameters must be positive");
    require(c.augment.k >= 1, "[augment] k must be >= 1");
    require(c.augment.max_keep >= 1, "[augment] max_keep must be >= 1");
    require(c.augment.temperature >= 0, "[augment] temperature must be >= 0");
    require(!c.eval.sizes.empty() && !c.eval.seeds.empty(), "[eval] sizes and seeds must not be empty");
    for (int s : c.eval.sizes) require(s >= 1, "[eval] sizes must be >= 1");
}

json config_to_json(const PipelineConfig& c) {
    std::vector<std::string> script;
    for (auto k : c.oracle.policy.candidate_script) script.emplace_back(to_string(k));
    return {
        {"run", {{"dir", c.run_dir.generic_string()}}},
        {"synth",
         {{"seed", c.synth.seed}, {"images", c.synth.images}, {"items", c.synth.items},
          {"out", c.synth.out.generic_string()}}},
        {"backend",
         {{"kind", c.backend.kind},
          {"name", c.backend.name},
          {"endpoint", c.backend.endpoint},
          {"model", c.backend.model},
          {"teacher_model", c.backend.teacher_model},
          {"api_key_env", c.backend.api_key_env},
          {"timeout_s", c.backend.timeout_s},
          {"max_retries", c.backend.max_retries},
          {"max_in_flight", c.backend.max_in_flight}}},
        {"oracle",
         {{"world", c.oracle.world.generic_string()},
          {"recall_schedule", c.oracle.policy.recall_schedule},
          {"box_jitter_rate", c.oracle.policy.box_jitter_rate},
          {"wrong_content_rate", c.oracle.policy.wrong_content_rate},
          {"cot_error_rate", c.oracle.policy.cot_error_rate},
          {"seed", c.oracle.policy.seed},
          {"candidate_script", script}}},
        {"data", {{"adapter", to_string(c.data.adapter)}, {"path", c.data.path.generic_string()}}},
        {"distill",
         {{"relaxed", c.distill.relaxed}, {"attach_image", c.distill.attach_image},
          {"max_tokens", c.distill.max_tokens}}},
        {"extract", {{"max_targets", c.extract.max_targets}}},
        {"bootstrap",
         {{"max_iterations", c.bootstrap.max_iterations},
          {"trainer", c.bootstrap.trainer},
          {"pad_frac", c.bootstrap.pad_frac},
          {"lora_rank", c.bootstrap.hyper.lora_rank},
          {"lora_alpha", c.bootstrap.hyper.lora_alpha},
          {"learning_rate", c.bootstrap.hyper.learning_rate},
          {"epochs", c.bootstrap.hyper.epochs}}},
        {"augment",
         {{"k", c.augment.k},
          {"max_keep", c.augment.max_keep},
          {"base_seed", c.augment.base_seed},
          {"temperature", c.augment.temperature},
          {"relaxed", c.augment.relaxed}}},
        {"eval",
         {{"sizes", c.eval.sizes},
          {"seeds", c.eval.seeds},
          {"relaxed", c.eval.relaxed},
          {"predictions", c.eval.predictions.generic_string()}}},
    };
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(config_to_json(config).dump()); }

}  // namespace gcot
