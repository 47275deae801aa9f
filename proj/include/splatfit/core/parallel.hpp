#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace splatfit {

// Thread count for data-parallel loops. Controlled by SPLATFIT_THREADS;
// defaults to 1 (fully deterministic reference mode).
inline int thread_count() {
    static const int n = [] {
        const char* env = std::getenv("SPLATFIT_THREADS");
        if (!env) return 1;
        const int v = std::atoi(env);
        return v < 1 ? 1 : v;
    }();
    return n;
}

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; callers
// must ensure iterations write disjoint state (or use per-chunk buffers
// merged afterwards in index order).
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int threads = thread_count();
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace splatfit
