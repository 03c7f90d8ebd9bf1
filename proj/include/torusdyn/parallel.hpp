// Minimal data-parallel loop. Work is split into contiguous index chunks and
// results must be written to per-index slots or combined by order-independent
// reductions (min/max/sum of independent slots), so outputs do not depend on
// the thread count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace torusdyn {

inline std::size_t& thread_count_ref() {
    static std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

inline void set_thread_count(std::size_t n) { thread_count_ref() = std::max<std::size_t>(1, n); }
inline std::size_t thread_count() { return thread_count_ref(); }

template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t chunk = std::max<std::size_t>(1, n / (workers * 8));
    auto run = [&] {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            std::size_t end = std::min(n, begin + chunk);
            for (std::size_t i = begin; i < end; ++i) body(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

} // namespace torusdyn
