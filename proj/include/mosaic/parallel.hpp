#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mosaic {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Items are handed
/// out in chunks; the first exception thrown by any item is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn, std::size_t chunk = 16) {
    workers = std::max(1u, workers);
    if (workers == 1 || n <= chunk) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) break;
            const std::size_t end = std::min(n, begin + chunk);
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, (n + chunk - 1) / chunk));
        pool.reserve(spawn);
        for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(run);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace mosaic
