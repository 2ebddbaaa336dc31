// Deterministic data-parallel helper. Work is split into contiguous chunks
// over disjoint output ranges, so results are independent of thread timing.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace xrid {

inline std::atomic<int>& job_limit() {
    static std::atomic<int> limit{0}; // 0 = hardware default
    return limit;
}

inline void set_job_limit(int jobs) { job_limit().store(jobs); }

inline int effective_jobs() {
    const int limit = job_limit().load();
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int base = hw > 0 ? hw : 1;
    return limit > 0 ? std::min(limit, base) : base;
}

// Invokes fn(i) for i in [0, n). fn must only write state owned by index i.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int jobs = std::min<std::size_t>(static_cast<std::size_t>(effective_jobs()), n);
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    const std::size_t chunk = (n + static_cast<std::size_t>(jobs) - 1) / static_cast<std::size_t>(jobs);
    for (int w = 0; w < jobs; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

} // namespace xrid
