#pragma once
#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace sg {

// Global worker cap, set once from the CLI --threads flag.
inline int& thread_cap() {
    static int cap = std::max(1u, std::thread::hardware_concurrency());
    return cap;
}
inline int max_threads() { return thread_cap(); }
inline void set_max_threads(int n) { thread_cap() = std::max(1, n); }

// Chunked parallel map over [0, n). fn must be thread-safe across disjoint i.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    int nt = std::min(max_threads(), n);
    if (nt <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < n; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace sg
