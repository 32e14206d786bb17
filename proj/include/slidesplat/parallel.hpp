// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace slidesplat {

/// Splits [0, count) into `workers` contiguous chunks and runs fn(begin, end, worker) on each.
/// Runs inline when workers <= 1. The first exception thrown by any worker is rethrown.
template <typename Fn> void parallel_chunks(int count, int workers, Fn &&fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        fn(0, count, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const int step = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int begin = w * step;
        const int end = std::min(count, begin + step);
        pool.emplace_back([&, begin, end, w] {
            try {
                fn(begin, end, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto &t : pool) t.join();
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace slidesplat
