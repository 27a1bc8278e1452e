#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mohpi {

// Worker count: MOHPI_THREADS when set to a positive integer, otherwise the
// hardware concurrency.
inline std::size_t worker_count()
{
    if (const char* env = std::getenv("MOHPI_THREADS"); env != nullptr && *env != '\0') {
        try {
            const long n = std::stol(env);
            if (n >= 1) {
                return static_cast<std::size_t>(n);
            }
        } catch (const std::exception&) {
            // unparsable value: fall back to the hardware count
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). Each index is processed exactly once; callers
// write results into pre-sized slots so output order never depends on the
// schedule. The first exception thrown by any task is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next = n;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace mohpi
