// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/eval_harness.hpp"

#include "gcot/rng.hpp"
#include "gcot/text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace gcot {

namespace {

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v + 0.0);
    return buf;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    s = text::trim(s);
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' || s.back() == ';')) {
        s.remove_suffix(1);
        s = text::trim(s);
    }
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (const auto n = text::currency_symbol_length(s, i)) {
            i += n;
            continue;
        }
        // Thousands separator: a comma between digits.
        if (s[i] == ',' && i > 0 && i + 1 < s.size() && text::is_ascii_digit(s[i - 1]) &&
            text::is_ascii_digit(s[i + 1])) {
            ++i;
            continue;
        }
        out.push_back(s[i++]);
    }
    return text::casefold(text::trim(out));
}

bool answers_equivalent(std::string_view predicted, std::string_view gold, bool relaxed) {
    const auto p = normalize_answer(predicted);
    const auto g = normalize_answer(gold);
    const auto pv = text::parse_normalized_decimal(p);
    const auto gv = text::parse_normalized_decimal(g);
    if (pv && gv) {
        if (relaxed && *gv != 0.0) return std::fabs(*pv - *gv) <= kRelaxedNumericTolerance * std::fabs(*gv);
        return text::nearly_equal(*pv, *gv, kExactNumericTolerance);
    }
    return p == g;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
    if (n > population) {
        throw NotEnoughSamples("requested " + std::to_string(n) + " samples from a dataset of " +
                               std::to_string(population));
    }
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::mt19937_64 engine(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(rng::uniform_below(engine, population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<QASample> sample_fewshot(std::span<const QASample> dataset, std::size_t n, std::uint64_t seed) {
    std::vector<QASample> out;
    out.reserve(n);
    for (auto idx : sample_indices(dataset.size(), n, seed)) out.push_back(dataset[idx]);
    return out;
}

double accuracy(std::span<const std::string> predictions, std::span<const std::string> golds, bool relaxed) {
    if (predictions.size() != golds.size()) {
        throw LengthMismatch(std::to_string(predictions.size()) + " predictions vs " + std::to_string(golds.size()) +
                             " gold answers");
    }
    if (golds.empty()) throw LengthMismatch("empty evaluation run");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        if (answers_equivalent(predictions[i], golds[i], relaxed)) ++matches;
    }
    return 100.0 * static_cast<double>(matches) / static_cast<double>(golds.size());
}

std::pair<double, double> mean_and_population_std(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

std::vector<EvalReport> evaluate(std::span<const EvalRun> runs, std::span<const int> sizes,
                                 std::span<const std::uint64_t> seeds, bool relaxed) {
    std::vector<EvalReport> reports;
    for (int size : sizes) {
        EvalReport report;
        report.sample_size = size;
        report.relaxed = relaxed;
        for (auto seed : seeds) {
            const auto it = std::find_if(runs.begin(), runs.end(),
                                         [&](const EvalRun& r) { return r.sample_size == size && r.seed == seed; });
            if (it == runs.end()) {
                throw InvalidArgument("no predictions for sample size " + std::to_string(size) + ", seed " +
                                      std::to_string(seed));
            }
            report.seeds.push_back(seed);
            report.per_seed_accuracy.push_back(accuracy(it->predictions, it->golds, relaxed));
        }
        std::tie(report.mean, report.std) = mean_and_population_std(report.per_seed_accuracy);
        reports.push_back(std::move(report));
    }
    return reports;
}

nlohmann::json report_to_json(const EvalReport& report) {
    return {
        {"v", "v1"},
        {"sample_size", report.sample_size},
        {"seeds", report.seeds},
        {"per_seed_accuracy", report.per_seed_accuracy},
        {"mean", report.mean},
        {"std", report.std},
        {"relaxed", report.relaxed},
    };
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.sample_size = j.at("sample_size").get<int>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.per_seed_accuracy = j.at("per_seed_accuracy").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    r.relaxed = j.value("relaxed", false);
    return r;
}

std::string render_report_table(std::span<const EvalReport> reports) {
    std::vector<std::vector<std::string>> rows;
    std::size_t n_seeds = 0;
    for (const auto& r : reports) n_seeds = std::max(n_seeds, r.seeds.size());
    std::vector<std::string> header{"size"};
    for (std::size_t i = 0; i < n_seeds; ++i) header.push_back("seed#" + std::to_string(i + 1));
    header.push_back("mean ± std");
    rows.push_back(header);
    for (const auto& r : reports) {
        std::vector<std::string> row{std::to_string(r.sample_size)};
        for (std::size_t i = 0; i < n_seeds; ++i) {
            row.push_back(i < r.per_seed_accuracy.size() ? format_fixed(r.per_seed_accuracy[i], 2) : "-");
        }
        row.push_back(format_fixed(r.mean, 2) + " ± " + format_fixed(r.std, 2));
        rows.push_back(std::move(row));
    }
    // "±" is two bytes but one column.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char c : s) w += (c & 0xC0) != 0x80;
        return w;
    };
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << std::string(widths[c] - width(row[c]), ' ') << row[c];
        }
        out << '\n';
    }
    return out.str();
}

std::string render_report_csv(std::span<const EvalReport> reports) {
    std::ostringstream out;
    out << "sample_size,seed,accuracy\n";
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.seeds.size(); ++i) {
            out << r.sample_size << ',' << r.seeds[i] << ',' << format_fixed(r.per_seed_accuracy[i], 4) << '\n';
        }
    }
    return out.str();
}

}  // namespace gcot
