// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/backend_gateway.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gcot::testing {

inline std::filesystem::path fixture(std::string_view rel) { return std::filesystem::path(GCOT_FIXTURE_DIR) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, std::string_view text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "gcot-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(std::string_view rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// Reference implementation of the keyed uniform draw, written from the
// published definitions (FNV-1a 64, SplitMix64 finalizer, top 53 bits).
namespace replay {

inline std::uint64_t fnv(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double draw(std::uint64_t seed, std::string_view key) {
    const std::uint64_t bits = mix(fnv(key) ^ mix(seed));
    return static_cast<double>(bits >> 11) / 9007199254740992.0;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline std::string ground_key(std::string_view image, std::string_view target, int round) {
    return "ground|" + std::string(image) + "|" + lower(target) + "|" + std::to_string(round);
}

inline std::string jitter_key(std::string_view image, std::string_view target, int round) {
    return "jitter|" + std::string(image) + "|" + lower(target) + "|" + std::to_string(round);
}

struct GroundingItem {
    std::string image_id;
    std::string surface;
};

/// Cumulative number of grounded items after each iteration when the model of
/// iteration k (1-based) answers with recall schedule[min(k - 1, size - 1)]
/// and every answered box is correct.
inline std::vector<int> expected_counts(const std::vector<GroundingItem>& items, const std::vector<double>& schedule,
                                        std::uint64_t seed, int iterations) {
    std::vector<bool> done(items.size(), false);
    std::vector<int> counts;
    int total = 0;
    for (int k = 1; k <= iterations; ++k) {
        const int round = k - 1;
        const double recall = schedule[std::min<std::size_t>(static_cast<std::size_t>(round), schedule.size() - 1)];
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (done[i]) continue;
            if (draw(seed, ground_key(items[i].image_id, items[i].surface, round)) < recall) {
                done[i] = true;
                ++total;
            }
        }
        counts.push_back(total);
    }
    return counts;
}

}  // namespace replay

/// Oracle answering through a callback and recording every request.
class ScriptOracle final : public Oracle {
public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    explicit ScriptOracle(Fn fn) : fn_(std::move(fn)) {}

    std::string answer(const ChatRequest& request) const override {
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(request);
        }
        return fn_(request);
    }

    std::vector<ChatRequest> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    Fn fn_;
    mutable std::mutex mutex_;
    mutable std::vector<ChatRequest> requests_;
};

inline BackendProfile oracle_profile(std::shared_ptr<const Oracle> oracle, int max_in_flight = 4) {
    BackendProfile p;
    p.name = "test-oracle";
    p.endpoint_url = "oracle://test";
    p.max_retries = 0;
    p.max_in_flight = max_in_flight;
    p.oracle = std::move(oracle);
    return p;
}

}  // namespace gcot::testing
