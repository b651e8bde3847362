#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace meshseq {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items are claimed
/// in index order; callers write results into per-index slots, so output
/// order never depends on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs - 1);
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace meshseq
