/*
   Copyright 2026 The Koszul Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#ifndef KOSZUL_PARALLEL_HPP
#define KOSZUL_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace koszul {

/// Worker count: KOSZUL_THREADS if set to a positive integer, else the
/// hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("KOSZUL_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<int>(std::min(v, 256L));
    }
    return static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 256u));
}

/// Runs body(begin, end, worker) over contiguous chunks of [0, count).
/// Chunk boundaries depend only on count and the worker count, and each
/// element is written by exactly one worker, so results never depend on
/// scheduling.
template <class Body>
void parallel_chunks(std::size_t count, Body&& body) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(thread_count()), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        body(std::size_t{0}, count, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end, w] {
            try {
                body(begin, end, static_cast<int>(w));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

template <class Body>
void parallel_for(std::size_t count, Body&& body) {
    parallel_chunks(count, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) body(i);
    });
}

}  // namespace koszul

#endif
