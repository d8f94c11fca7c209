// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace occlukit {

/// Worker count used when a caller passes 0.
inline unsigned default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, n) into `workers` contiguous chunks and calls fn(begin, end) on
/// each from its own thread. Chunk boundaries depend only on n and the worker
/// count; callers that write to disjoint output slots get results independent
/// of scheduling. The first exception thrown by any chunk is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = default_workers();
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    if (chunks <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        threads.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace occlukit
