// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/core_model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gcot {

inline constexpr double kExactNumericTolerance = 1e-6;
inline constexpr double kRelaxedNumericTolerance = 5e-2;

/// Sample sizes and seeds of the few-shot protocol.
inline constexpr int kDefaultSampleSizes[] = {8, 16, 32, 64, 128};
inline constexpr std::uint64_t kDefaultSeeds[] = {1, 2, 3};

/// Trim, case-fold, drop currency symbols and trailing sentence punctuation.
std::string normalize_answer(std::string_view s);

/// Numeric answers compare as decimals (exact within 1e-6, or within 5% of
/// the gold value in relaxed mode); anything else compares as normalized text.
bool answers_equivalent(std::string_view predicted, std::string_view gold, bool relaxed = false);

/// n distinct indices from [0, population), uniform, fully determined by seed.
/// Returned in ascending order. Throws NotEnoughSamples when n > population.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

std::vector<QASample> sample_fewshot(std::span<const QASample> dataset, std::size_t n, std::uint64_t seed);

/// Predictions of the model trained for one (sample size, seed) cell, aligned with golds.
struct EvalRun {
    int sample_size = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> predictions;
    std::vector<std::string> golds;
};

/// 100 * matches / total. Throws LengthMismatch.
double accuracy(std::span<const std::string> predictions, std::span<const std::string> golds, bool relaxed = false);

/// Mean and population standard deviation.
std::pair<double, double> mean_and_population_std(std::span<const double> values);

/// One report per size, per-seed accuracies in `seeds` order.
/// Throws LengthMismatch on misaligned runs, InvalidArgument on a missing cell.
std::vector<EvalReport> evaluate(std::span<const EvalRun> runs, std::span<const int> sizes,
                                 std::span<const std::uint64_t> seeds, bool relaxed = false);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Aligned plain-text table: size | per-seed accuracies | mean ± std.
std::string render_report_table(std::span<const EvalReport> reports);
/// One row per (size, seed): sample_size,seed,accuracy
std::string render_report_csv(std::span<const EvalReport> reports);

}  // namespace gcot
