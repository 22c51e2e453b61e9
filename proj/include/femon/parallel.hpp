#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace femon {

/// Runs fn(first, last) over contiguous chunks of [0, n) on `workers`
/// threads (0 = hardware concurrency).  Chunking only affects scheduling;
/// callers that write results by index get output independent of the
/// worker count.
inline void parallel_chunks(std::size_t n, std::size_t workers,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (workers == 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        workers = hc > 0 ? hc : 1;
    }
    workers = std::min(workers, n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t first = w * chunk;
        const std::size_t last = std::min(first + chunk, n);
        if (first >= last) break;
        pool.emplace_back(fn, first, last);
    }
    for (auto& t : pool) t.join();
}

}  // namespace femon
