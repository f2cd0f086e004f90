#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace dduq {

/// Runs f(i) for i in [0, n) on up to `threads` threads in contiguous chunks.
/// Each index is visited exactly once; callers write only to index-owned data.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    const std::size_t t = std::clamp<std::size_t>(threads < 1 ? 1 : static_cast<std::size_t>(threads), 1, std::max<std::size_t>(n, 1));
    if (t == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(t);
    const std::size_t chunk = (n + t - 1) / t;
    for (std::size_t w = 0; w < t; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([b, e, &f] {
            for (std::size_t i = b; i < e; ++i) f(i);
        });
    }
}

}  // namespace dduq
