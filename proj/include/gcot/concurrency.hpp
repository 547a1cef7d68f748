// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gcot {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any call is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (n == 0) return;
    workers = std::clamp<std::size_t>(workers, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gcot
