#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace spk {

// Worker count for data-parallel loops; 0 or negative means hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(begin, end) over contiguous blocks of [0, n). Blocks are fixed by n
// and the worker count only, so per-block reductions combine deterministically.
template <class F>
void parallel_for(size_t n, F&& fn) {
    size_t workers = static_cast<size_t>(std::max(1, num_threads()));
    workers = std::min(workers, std::max<size_t>(1, n / 4096));
    if (workers <= 1) {
        fn(size_t(0), n);
        return;
    }
    std::vector<std::thread> pool;
    size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
        size_t b = w * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace spk
