#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ei {

/// Runs task(i) for i in [0, count) on up to `workers` threads. Tasks must
/// write only to their own output slots. If tasks throw, the exception of the
/// lowest failing index is rethrown after all threads join, so the reported
/// error does not depend on scheduling.
template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_index = count;
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    const auto n = workers < count ? workers : count;
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(run);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace ei
