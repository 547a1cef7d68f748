// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"
#include "gcot/core_model.hpp"
#include "gcot/grounder.hpp"
#include "gcot/image.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gcot {

inline constexpr int kMaxItemsPerImage = 10;
inline constexpr double kMinCellGap = 0.05;

/// One text cell with its ground-truth box.
struct SynthCell {
    std::string id;  // "<image id>/r<row>/<name|price>"
    std::string text;
    NBox box;
    PixelRect rect;
    int row = 0;

    bool operator==(const SynthCell&) const = default;
};

struct SynthImage {
    ImageRef image;
    std::vector<SynthCell> cells;  // row-major: name, price, name, price, ...

    bool operator==(const SynthImage&) const = default;
};

struct SynthWorld {
    std::uint64_t seed = 0;
    std::vector<SynthImage> images;
    std::vector<QASample> qa;
    /// Row indices of the two priced items each QA asks about, aligned with qa.
    std::vector<std::pair<int, int>> qa_items;

    const SynthImage* find_image(std::string_view image_id) const;
    const QASample* find_sample(std::string_view sample_id) const;
};

/// Scripted shapes of self-generated GCoT candidates.
enum class CandidateKind { correct, wrong_answer, bad_box, no_marker };

std::string_view to_string(CandidateKind kind);
CandidateKind candidate_kind_from_string(std::string_view s);

struct OraclePolicy {
    /// Probability that a grounding query is answered, per training round.
    /// Round k uses entry min(k, size - 1).
    std::vector<double> recall_schedule{1.0};
    /// Probability that an answered grounding query returns the box of the
    /// neighbouring row instead of the true one.
    double box_jitter_rate = 0.0;
    /// Probability that a read query returns a corrupted string.
    double wrong_content_rate = 0.0;
    /// Probability that a distilled CoT misstates the first price (answer stays correct).
    double cot_error_rate = 0.0;
    std::uint64_t seed = 0;
    /// Candidate shape for generation request seed s is script[s % size].
    std::vector<CandidateKind> candidate_script{CandidateKind::correct};
};

void validate(const OraclePolicy& policy);

/// Renders item/price tables, writes `<out_dir>/images/*.png` and
/// `<out_dir>/manifest.json`, and returns the world with absolute image paths.
/// Requires n_images >= 1 and 2 <= items_per_image <= 10.
SynthWorld generate_world(std::uint64_t seed, int n_images, int items_per_image, const std::filesystem::path& out_dir);

/// Pixels of one table, without touching the filesystem.
GrayImage render_table(const SynthImage& image);

nlohmann::json world_to_manifest(const SynthWorld& world, const std::filesystem::path& base_dir);
SynthWorld world_from_manifest(const nlohmann::json& manifest, const std::filesystem::path& base_dir);
SynthWorld load_world(const std::filesystem::path& manifest_path);

// --- Scripted oracle -------------------------------------------------------

/// Uniform draw in [0, 1) keyed by (policy seed, key): splitmix64 over FNV-1a.
double policy_draw(std::uint64_t policy_seed, std::string_view key);

/// Training round encoded in a model identifier: "base@3" -> 3, "base" -> 0.
int model_round(std::string_view model);
/// "base@3" -> "base@4"; the no-op trainer's output for the next round.
std::string next_round_model(std::string_view model);

/// Draw keys, exposed so replays outside the oracle can reproduce its choices.
std::string recall_key(std::string_view image_id, std::string_view target, int round);
std::string jitter_key(std::string_view image_id, std::string_view target, int round);
std::string read_key(std::string_view image_id, const PixelRect& rect, int round);
std::string cot_error_key(std::string_view sample_id);

/// Maps both letters (ROT13) and digits (+5 mod 10), so every corrupted
/// string differs from its source under the consistency rules.
std::string corrupt_text(std::string_view s);

/// Cell read by a truthful reader for a crop: largest covered fraction of the
/// cell, then larger overlap area, then smaller cell id. nullptr if none overlap.
const SynthCell* cell_under_crop(const SynthImage& image, const PixelRect& crop);

/// Cell whose text equals the target under the consistency rules.
const SynthCell* cell_for_target(const SynthImage& image, std::string_view target);

/// Box of the same-column cell in the adjacent row (next row, or previous on the last row).
NBox jittered_box(const SynthImage& image, const SynthCell& cell);

/// Templated grounded or plain reasoning for one synth QA.
std::string synth_cot_text(const SynthWorld& world, const QASample& sample, bool misstate_first_price);

class ScriptedOracle final : public Oracle {
public:
    ScriptedOracle(std::shared_ptr<const SynthWorld> world, OraclePolicy policy);

    std::string answer(const ChatRequest& request) const override;

    const SynthWorld& world() const { return *world_; }
    const OraclePolicy& policy() const { return policy_; }

private:
    std::string answer_distill(const ChatRequest& request) const;
    std::string answer_ground(const ChatRequest& request) const;
    std::string answer_read(const ChatRequest& request) const;
    std::string answer_generate(const ChatRequest& request) const;

    const SynthImage& image_of(const ChatRequest& request) const;

    std::shared_ptr<const SynthWorld> world_;
    OraclePolicy policy_;
};

/// Profile whose completions come from a ScriptedOracle over `world`.
BackendProfile oracle_configure(std::shared_ptr<const SynthWorld> world, const OraclePolicy& policy,
                                int max_in_flight = 8);

}  // namespace gcot
